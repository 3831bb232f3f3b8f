"""Information rate of a background-limited PPM optical link with Geiger-mode photon counting."""
from .channel import (ChannelParams, ClickProbs, click_probabilities, log_marginal_prob,
                      log_seq_prob_empty, log_seq_prob_signal)
from .infotheory import (InfoResult, TruncationError, mi_bits, mutual_information,
                         mutual_information_lower_bound, mutual_information_ook_bound,
                         relative_entropy_binary, simple_decoding_quadratic_approx)
from .linkbudget import (AU, FarFieldError, LinkGeometry, RangePoint, detected_signal_level,
                         max_rate, range_sweep, reference_geometry, total_efficiency)
from .optimize import (AsymptoticLimit, OptimResult, asymptotic_pie, optimize_ppm_order, pie,
                       simple_decoding_asymptotics)

__version__ = "0.1.0"
