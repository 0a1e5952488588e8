# %% [markdown]
# # SoS bounds, certificates and rank diagnostics

# %%
from __future__ import annotations

import math

from qsos.algebra import format_key
from qsos.models import syk, toy4, two_qubit
from qsos.sos import (
    RESTRICTED,
    extract_certificate,
    fermion_parity,
    lower_bound,
    moment_rank_report,
)
from qsos.spectra import extremal_eigs

# %% [markdown]
# Two qubits: the general degree-2 bound is exact, the Hermitian-restricted one is not.

# %%
for g in (0.5, 1.0, 2.0):
    general = lower_bound(two_qubit(g), 1)[0]
    restricted = lower_bound(two_qubit(g), 1, RESTRICTED)[0]
    print(f"g={g}: general {general:.8f}  exact {-2 * math.sqrt(1 + g * g / 4):.8f}  restricted {restricted:.8f}")

# %% [markdown]
# The toy4 pairing model at degree 4, with the certificate H = lam + sum w O^dag O.

# %%
H = toy4(1.5)
lam, sol, mp = lower_bound(H, 2, symmetry=[fermion_parity()])
cert = extract_certificate(mp, sol)
print("bound", lam, "exact", extremal_eigs(H, "min").emin, "residual", cert.residual)
for w, O in sorted(cert.squares, key=lambda t: -t[0])[:3]:
    top = sorted(O.terms.items(), key=lambda kv: -abs(kv[1]))[:3]
    print(f"w={w:.4f}", [(format_key(O.kind, k), round(abs(c), 4)) for k, c in top])

# %% [markdown]
# Zero eigenvalues of the ground-state moment matrix, split by parity.

# %%
for eps in (0.0, 0.5, 1.0):
    rep = moment_rank_report(toy4(eps), 2)
    print(f"eps={eps}: zeros {rep.zero_count}  by sector {rep.sector_zero_counts}")

# %% [markdown]
# The hierarchy on a small SYK instance.

# %%
H = syk(6, 4, seed=0)
e0 = extremal_eigs(H, "min").emin
for r in (2, 3):
    print(f"r={r}: bound {lower_bound(H, r, symmetry=[fermion_parity()])[0]:.6f}  E0 {e0:.6f}")
