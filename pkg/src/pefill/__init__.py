"""Poincare-Einstein fillings of S^1 x S^{n-1}: curvature, Einstein ODE, renormalized
volume, Gauss-Bonnet, Yamabe constants and hypothesis gates."""

from .config import Settings, load_settings
from .curvature import (CurvatureReport, curvature_report, ricci_and_residual,
                        sectional_curvatures, weyl_diagonal)
from .einstein_ode import (ProfileSolution, SeriesSeed, combinatorial_identity_check,
                           integrate_profiles, ode_residuals, series_seed)
from .errors import *  # noqa: F401,F403
from .gates import (BallVolumeEstimate, YamabeResult, hyperbolic_ball_volume,
                    quotient_ball_volume, theorem_gates, yamabe_product, yamabe_sphere)
from .profile import HyperbolicFilling, MetricProfile, hyperbolic_profile
from .renvol import (CompactificationChart, VolumeExpansion, build_chart,
                     extract_renormalized_volume, gauss_bonnet_check, regularized_volume)
from .report import FillingEntry, FillingReport, fillings, scan, verify_all
from .schwarzschild import (SchwarzschildParams, export_profile, horizons_from_lambda,
                            lambda_from_horizon, mass_from_horizon, potential,
                            renormalized_volume_closed_form, weyl_energy_closed_form)

__version__ = "0.1.0"
