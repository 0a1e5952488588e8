# %% [markdown]
# # Experiments: vector model, lattice TFIM, SYK, nonlocal time

# %%
from __future__ import annotations

import numpy as np

from qsos.critical import (
    VectorModelParams,
    critical_scan,
    finite_difference_ground_energy,
    solve_vector_model,
    variational_vector_energy,
)
from qsos.nonlocal_time import embedded_Z, logZ_series, single_qubit_model, step_model, two_qubit_model
from qsos.syk import excitation_lanczos, gaussian_vs_spectrum, norm_scaling

# %% [markdown]
# Single-site vector model: SoS bound, finite-difference ground energy, Gaussian variational energy.

# %%
for V in (0.5, 1.0, 2.0):
    p = VectorModelParams(V=V)
    print(V, solve_vector_model(p).energy_bound, finite_difference_ground_energy(V), variational_vector_energy(p)[1])

# %% [markdown]
# Degree-2 lattice TFIM bound in 3D: critical field and magnetization exponent.

# %%
scan = critical_scan(32)
print("h_cr", scan.h_cr, "exponent", scan.exponent)
print(np.column_stack([scan.h - scan.h_cr, scan.m]))

# %% [markdown]
# SYK: matricization norms and Gaussian states against the top of the spectrum.

# %%
res = norm_scaling((16, 32, 64), range(3))
print({p: round(s, 3) for p, s in res["slopes"].items()})
print([round(gaussian_vs_spectrum(10, 100, s)["ratio"], 3) for s in range(3)])
tr = excitation_lanczos(9, 5, seed=0)
print("Ritz / lambda_max", np.round(tr.ratio, 4))

# %% [markdown]
# Nonlocal time: log Z coefficients and the embedded oscillator model.

# %%
print(logZ_series(single_qubit_model()).to_json())
print(logZ_series(two_qubit_model()).c2)
m = step_model(1.0, 1.0, 0.0, 4.0)
print([round(embedded_Z(m, g, n_max=4, steps=100), 5) for g in np.linspace(0, 1, 6)])
