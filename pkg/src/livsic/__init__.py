"""Livsic characteristic functions computed from reproducing kernels."""

from .char import (CharFunction, EquivalenceResult, build_char, charfn_eval, equivalence_test,
                   factorization_residual, involution_defect, phi_eval, psi_eval)
from .halfplane import (GridSpec, PointGrid, blaschke_b, blaschke_b_inverse, default_grid, make_grid,
                        radial_sequence)
from .herglotz import AtomicMeasure, HerglotzFunction, atom_fit, atom_locate, herglotz_kernel_eval, omega_eval
from .models import (AtomicMeasureModel, DirectCharModel, FreeHalfLineModel, KernelModel, PaleyWienerModel,
                     SturmLiouvilleModel, ToeplitzSlitModel, g_inverse_eval, kernel_eval, sl_solve,
                     validate_model)
from .report import VerificationReport

__version__ = "0.1.0"
