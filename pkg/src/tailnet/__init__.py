"""Heavy-tailed dependence models, cone-wise regular variation, and CoVaR
asymptotics for bipartite risk networks, with a Monte Carlo harness that
validates every closed-form rate against simulation or analytic oracles."""

from .copula import (BernsteinMixture, CorrelationMatrix, Gaussian, Iid,
                     MarshallOlkin, MoRateFamily, ParetoMargin, RiskModel,
                     bernstein_mixture_sample, mo_eta, sample, survival_copula)
from .covar import (CovarQuery, EciReport, GSpec, HFunction,
                    covar_asymptotic_gauss, covar_asymptotic_generic,
                    covar_asymptotic_mo, covar_empirical, eci, eci_empirical,
                    var_empirical)
from .errors import (CapacityError, DegenerateQpError, DispatchError,
                     DomainError, ModelError, ReliabilityError, ScenarioError,
                     TailnetError)
from .mrv import (ConeSpec, PowerLog, QpSolution, RectSet, empirical_ai_ratio,
                  gaussian_cone_spec, gaussian_mu, gaussian_support_mass,
                  gaussian_tail_asymptotic, mo_cone_spec, mo_mu,
                  mutual_ai_gaussian, pairwise_ai_gaussian, solve_qp)
from .network import (AdjacencyMatrix, BipartiteNetwork, OverlapProfile,
                      WeightSpec, aggregate, cover_index, disjoint_mu_bar_2,
                      mu_bar_1, mu_bar_2_overlap, network_cond_prob,
                      network_covar, network_eci, one_vs_max, overlap_profile,
                      resolve_case, sample_adjacency, sample_losses)
from .scenario import Scenario, load_scenario, parse_scenario

__version__ = "0.1.0"
