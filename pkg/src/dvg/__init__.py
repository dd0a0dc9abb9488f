"""Dynamic Variance-Gamma model: distribution, dynamics, risk-neutral pricing,
likelihood estimation and option-surface calibration."""

from .errors import (BranchCutError, ConvergenceError, DomainError, DVGError,
                     IntegrationError, MeasureChangeError, ValidationError)
from .mixture import (QuadratureRule, SVGParams, VGParams, gauss_laguerre, laguerre_eval,
                      vg_density, vg_log_mgf, vg_logdensity, vg_mgf, vg_moments, vg_sample)
from .dynamics import (DVGParams, PathSample, QParams, simulate, step_state, submodel,
                       terminal_log_return)
from .charfn import CoefPath, coef_recursion, iid_coefficients, log_terminal_mgf, terminal_mgf
from .esscher import (EsscherMap, esscher_map, esscher_parameter, radon_nikodym_weight,
                      to_risk_neutral)
from .pricing import (FourierConfig, MCResult, PricingRequest, density_inversion,
                      price_fourier, price_fourier_strikes, price_mc, price_mc_strikes)
from .hn import HNRiskNeutral
from .estimation import FitConfig, FitResult, HNParams, fit, lr_test, loglik, svg_logdensity
from .calibration import (CalibrationConfig, CalibrationResult, OptionQuote, batch_calibrate,
                          calibrate, loss)

__version__ = "0.1.0"
