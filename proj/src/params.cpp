#include "masim/params.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace masim {

double SystemParams::log2K() const {
  if (K < 2) return 1.0;
  return std::log2(static_cast<double>(K));
}

int ceil_log2_u64(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("ceil_log2: n must be >= 1");
  if (n == 1) return 0;
  return std::bit_width(n - 1);
}

int repetition_factor(double R) {
  if (!(R > 0.0) || R > 1.0) throw std::invalid_argument("code rate must be in (0,1]");
  double inv = 1.0 / R;
  int rep = static_cast<int>(std::llround(inv));
  if (rep < 1 || std::abs(inv - rep) > 1e-9)
    throw std::invalid_argument("repetition codec requires integer 1/R");
  return rep;
}

void validate(const SystemParams& p) {
  if (p.K < 1) throw std::invalid_argument("K must be >= 1");
  if (p.N < 1) throw std::invalid_argument("N must be >= 1");
  if (p.S < 1) throw std::invalid_argument("S must be >= 1");
  if (p.B < 1) throw std::invalid_argument("B must be >= 1");
  if (p.D < 3) throw std::invalid_argument("D must be >= 3");
  if (p.B < p.D) throw std::invalid_argument("B must be >= D");
  if (p.M < 0) throw std::invalid_argument("M must be >= 0");
  if (p.M >= p.B) throw std::invalid_argument("M must be < B");
  if (p.C0 < 1) throw std::invalid_argument("C0 must be >= 1");
  if (p.C1 < 1) throw std::invalid_argument("C1 must be >= 1");
  if (p.C2 < 0) throw std::invalid_argument("C2 must be >= 0");
  if (!(p.a_lo < p.a_hi)) throw std::invalid_argument("a_lo must be < a_hi");
  if (!(p.a_lo > 0.0)) throw std::invalid_argument("a_lo must be > 0");
  if (!(p.T > 0.0)) throw std::invalid_argument("T must be > 0");
  if (p.sigma2 < 0.0) throw std::invalid_argument("sigma2 must be >= 0");
  if (!(p.eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  (void)repetition_factor(p.R);
}

SystemParams derive_theorem_params(int K, std::uint64_t N, std::uint64_t S,
                                   int M, double R, int D, double beta0,
                                   double beta1, double beta2, double a_lo,
                                   double a_hi, double sigma2) {
  if (K < 2) throw std::invalid_argument("theorem mode requires K >= 2");
  if (D < 3) throw std::invalid_argument("D must be >= 3");
  if (beta0 < static_cast<double>(D) * (D - 1) + 1)
    throw std::invalid_argument("beta0 must be >= D(D-1)+1");
  if (!(a_lo < a_hi)) throw std::invalid_argument("a_lo must be < a_hi");
  if (!(a_lo > 0.0)) throw std::invalid_argument("a_lo must be > 0");
  int rep = repetition_factor(R);
  (void)rep;

  SystemParams p;
  p.K = K;
  p.N = N;
  p.S = S;
  p.M = M;
  p.R = R;
  p.D = D;
  p.beta0 = beta0;
  p.beta1 = beta1;
  p.beta2 = beta2;
  p.a_lo = a_lo;
  p.a_hi = a_hi;
  p.sigma2 = sigma2;
  p.eta = a_lo * a_lo;
  p.B = static_cast<int>(std::llround(beta0 * K));

  int nbits = ceil_log2_u64(N * S);
  p.C0 = static_cast<int>(std::ceil(nbits / R)) + 1;
  double lk = std::log2(static_cast<double>(K));
  p.C1 = static_cast<int>(std::ceil(beta1 * lk));
  double ratio = a_hi / a_lo;
  double lk4 = lk * lk * lk * lk;
  double km = std::log2(static_cast<double>(K) * M + 1.0);
  p.C2 = M + static_cast<int>(std::ceil(beta2 * ratio * ratio * lk4 * K * km));
  p.rho = p.T / 8.0;
  p.varrho = std::sqrt(p.eta) / 8.0;
  validate(p);
  return p;
}

SystemParams derive_simulation_params(int K, std::uint64_t N, int M,
                                      double sigma2, double a_lo, double a_hi) {
  if (K < 2) throw std::invalid_argument("simulation mode requires K >= 2");
  if (N < 2) throw std::invalid_argument("simulation mode requires N >= 2");
  if (!(a_lo < a_hi)) throw std::invalid_argument("a_lo must be < a_hi");
  if (!(a_lo > 0.0)) throw std::invalid_argument("a_lo must be > 0");

  SystemParams p;
  p.K = K;
  p.N = N;
  p.S = 1;
  p.M = M;
  p.D = 3;
  p.R = 0.5;
  p.B = 6 * K;
  p.C0 = 2 + 2 * ceil_log2_u64(N);
  p.C1 = ceil_log2_u64(static_cast<std::uint64_t>(K));
  p.C2 = 0;  // experiment input, set by caller
  p.sigma2 = sigma2;
  p.a_lo = a_lo;
  p.a_hi = a_hi;
  p.eta = a_lo * a_lo;
  p.beta1 = 1.0;
  p.rho = p.T / 8.0;
  p.varrho = std::sqrt(p.eta) / 8.0;
  return p;
}

std::int64_t codelength(const SystemParams& p) {
  if (p.B < p.D || p.B < 1) throw std::invalid_argument("codelength: B must be >= D");
  if (p.C0 < 0 || p.C1 < 0 || p.C2 < 0 || p.M < 0)
    throw std::invalid_argument("codelength: negative field");
  return static_cast<std::int64_t>(p.B + p.M) * (p.C0 + p.C1) + p.C2;
}

GroupingPlan plan_grouping(int K, std::uint64_t N, int M, double sigma2,
                           const std::vector<std::pair<double, double>>& ranges,
                           const std::vector<int>& group_sizes,
                           const std::vector<int>& C2_per_group,
                           HashWidthMode mode) {
  if (ranges.empty()) throw std::invalid_argument("grouping: no ranges");
  if (ranges.size() != group_sizes.size() || ranges.size() != C2_per_group.size())
    throw std::invalid_argument("grouping: ranges, sizes, C2 lists must align");
  int total = 0;
  for (int g : group_sizes) {
    if (g < 2) throw std::invalid_argument("grouping: every group needs >= 2 members");
    total += g;
  }
  if (total != K) throw std::invalid_argument("grouping: group sizes must sum to K");
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (!(ranges[i].first < ranges[i].second))
      throw std::invalid_argument("grouping: empty amplitude sub-range");
    if (i + 1 < ranges.size() && ranges[i].second != ranges[i + 1].first)
      throw std::invalid_argument("grouping: sub-ranges must partition [a_lo, a_hi)");
  }

  GroupingPlan plan;
  plan.hash_width_mode = mode;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    int basis = (mode == HashWidthMode::Shared) ? K : group_sizes[i];
    SystemParams gp = derive_simulation_params(basis, N, M, sigma2,
                                               ranges[i].first, ranges[i].second);
    gp.C2 = C2_per_group[i];
    GroupRow row;
    row.a_lo = ranges[i].first;
    row.a_hi = ranges[i].second;
    row.members = group_sizes[i];
    row.params = gp;
    row.L = codelength(gp);
    plan.total_codelength += row.L;
    plan.groups.push_back(row);
  }
  return plan;
}

EtaAdmissibility check_eta_admissible(const SystemParams& p) {
  EtaAdmissibility r;
  double c1 = std::ceil(p.beta1 * std::log2(static_cast<double>(p.K)));
  double lnk = std::log(static_cast<double>(p.K));
  double denom = p.beta0 * static_cast<double>(p.K);
  r.bound = (denom > 0.0) ? 32.0 * p.sigma2 * c1 * lnk / denom : 0.0;
  if (r.bound < 0.0) r.bound = 0.0;
  r.slack = p.eta - r.bound;
  r.admissible = p.eta >= r.bound;
  return r;
}

RefinementConstants analysis_refinement_constants(const SystemParams& p,
                                                  double alpha_graph) {
  if (!(alpha_graph > 0.0))
    throw std::invalid_argument("alpha_graph must be > 0");
  RefinementConstants rc;
  double root_eta = std::sqrt(p.eta);
  double d = static_cast<double>(p.D);
  double lb0 = std::log2(p.beta0 > 0 ? p.beta0 : 1.0);
  double common = alpha_graph * p.beta1 * (1.0 + lb0) * d;
  rc.varrho = (d - 1.0) * root_eta / (8.0 * common);
  rc.rho = p.T * (d - 1.0) * root_eta /
           (32.0 * std::numbers::pi * p.a_hi * common);
  return rc;
}

}  // namespace masim
