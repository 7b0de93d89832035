"""Taylor coefficients of Ramanujan's Delta at points of the upper half plane.

Exact recursions for the coefficients at CM points, non-vanishing
certificates from their periodicity modulo primes, floating point routes to
the coefficients anywhere, the zeros of the associated functions calE_m and
numerical checks of the Poincare series identities behind them.
"""
__version__ = "0.1.0"

from .cmdata import DISCRIMINANTS, CMPointSpec, Normalization, all_specs, chowla_selberg, normalization, registry
from .exactalg import FieldSpec, KElt, QuadElt, ResidueElt, TruncPoly, mult_order, trunc_derivative, trunc_mul
from .numerics import (SeriesContext, UpperHalfPoint, coeff_all_routes, coeff_via_cm_exact,
                       coeff_via_derivatives, coeff_via_calE, eval_calE, eval_delta, eval_E2star,
                       eval_E4, eval_E6, reduce_to_fundamental, tau)
from .periodicity import (ALL_NONZERO, HAS_ZERO_AT, TENDS_TO_ZERO, BudgetExceeded, PeriodCertificate,
                          PsiMap, build_psi, certify_nonvanishing, detect_cycle, ideal_condition,
                          period_relations_check, psi_orbit_period, residue_criterion_scan, tends_to_zero)
from .petersson import (TruncationPolicy, coeff_of_elliptic_at_infty, elliptic_poincare, fks, gk,
                        parabolic_poincare, petersson_norm_delta, verify_elliptic_elliptic,
                        verify_parabolic_elliptic)
from .recurrences import QRPoly, QuadPoly, bseq, cm_qseq, cm_qseq_mod, general_pseq, pseq, qseq_omega
from .zerofinder import SearchRegion, ZeroRecord, boundary_zeros, find_zeros, interior_zeros, sign_change_certificate
