"""Desk-scale quantum-selected configuration interaction (QSCI) laboratory."""

from importlib import resources
from pathlib import Path

from .detspace import Determinant, enumerate_strings, excitation, hartree_fock, join, slater_condon, split_raw
from .eig import CIVector, build_hamiltonian, ground_state, occupations, solve_space
from .integrals import MolecularHamiltonian, T2Tensor, fock_diagonal, mp2_t2, parse_fcidump, parse_t2, read_fcidump
from .lucj import LucjLayer, LucjParams, apply_jastrow, apply_orbital_rotation, build_state, params_from_t2
from .recovery import RecoveryConfig, correct_configurations, filter_physical, recover_loop
from .sampler import NoiseConfig, SampleSet, apply_noise, random_uniform_set, read_samples, sample_exact, write_samples
from .subspace import BatchConfig, draw_strings, full_subspace, recombine, run_batches

__version__ = "0.1.0"


def data_path(name: str) -> Path:
    """Path of a bundled fixture, e.g. ``data_path("h4_2.00.fcidump")``."""
    return Path(str(resources.files(__package__) / "data" / name))
