"""Sum-of-squares moment hierarchy workbench for qubit and fermion Hamiltonians."""

from .algebra import OperatorPolynomial
from .models import ModelSpec, build_hamiltonian

__all__ = ["OperatorPolynomial", "ModelSpec", "build_hamiltonian"]
__version__ = "0.1.0"
