"""Regenerate the synthetic CSV fixtures shipped with the package."""
from pathlib import Path

import numpy as np

from spinterface.coherent import CoherentParams
from spinterface.protocols import simulate_rabi
from spinterface.rates import PumpModel
from spinterface.series import Trace
from spinterface.spin import SpinSystem

OUT = Path(__file__).resolve().parents[1] / "src" / "spinterface" / "data" / "fixtures"


def main():
    model = PumpModel(SpinSystem(D=3.63), W=1 / 3.3e-6, B0_mT=10.0)
    params = CoherentParams(rabi_frequency=12.5)
    rabi = simulate_rabi(model, params, np.linspace(0.0, 400e-9, 81))
    rabi.metadata.update({"rabi_MHz": 12.5, "source": "simulate_rabi, compound-1 defaults"})
    rabi.to_csv(OUT / "rabi.csv")

    t = np.linspace(0.0, 30e-6, 61)
    decay = Trace(t, 2.0 * np.exp(-t / 3.3e-6) + 0.05, axis_name="time_s",
                  metadata={"tau_s": 3.3e-6, "model": "2 exp(-t/tau) + 0.05"})
    decay.to_csv(OUT / "exp_decay.csv")


if __name__ == "__main__":
    main()
