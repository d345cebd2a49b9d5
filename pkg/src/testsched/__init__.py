"""Makespan scheduling on identical machines where job lengths are revealed by tests."""

from .adversary import (GameParams, fully_online_lb2_family, greedy_tightness_family,
                        m2_game_optimize, m2_game_value, make_reveal, preemptive_adversary,
                        thm1_family)
from .core import (PHI, DomainError, Instance, Job, Mode, ProtocolError, Setting, alg_time,
                   bound_greedy, bound_lb_nonpre, bound_lb_pre, bound_uniform_lambda,
                   prop1_decide, ratio_c, ratio_c1, ratio_r, rho, tau, threshold_T,
                   threshold_T1)
from .oracle import CapacityError, lpt, mcnaughton, opt_exact, opt_offline
from .schedulers import (Schedule, RunTrace, greedy, sbs, sbs_partition, two_phases,
                         uniform_sbs, uniform_small_lambda, validate_schedule)

__version__ = "0.1.0"
