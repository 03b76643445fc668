#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "beaconnav/evalkit.hpp"

namespace beaconnav::evalkit {

namespace {

// Ranks of |d| doubled so that tied average ranks stay integral.
std::vector<long> doubled_ranks(const std::vector<double>& absd, double& tie_term) {
  const std::size_t n = absd.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return absd[a] < absd[b]; });
  std::vector<long> ranks(n);
  tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && absd[order[j + 1]] == absd[order[i]]) ++j;
    // 1-based ranks i+1..j+1 average to (i+j+2)/2.
    const long r2 = static_cast<long>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r2;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  return ranks;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y, Alternative alt) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "Wilcoxon: samples differ in length");
  if (x.empty()) throw Error(ErrorCode::SampleTooSmall, "Wilcoxon: empty samples");

  std::vector<double> d;
  d.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double di = x[i] - y[i];
    if (!std::isfinite(di)) throw Error(ErrorCode::InvalidArgument, "Wilcoxon: non-finite data");
    if (di != 0.0) d.push_back(di);
  }
  if (d.empty()) throw Error(ErrorCode::DegenerateSample, "Wilcoxon: all differences are zero");

  const std::size_t n = d.size();
  std::vector<double> absd(n);
  for (std::size_t i = 0; i < n; ++i) absd[i] = std::abs(d[i]);
  double tie_term = 0.0;
  const auto r2 = doubled_ranks(absd, tie_term);

  long wplus2 = 0;
  long total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += r2[i];
    if (d[i] > 0) wplus2 += r2[i];
  }

  WilcoxonResult res;
  res.n_effective = static_cast<int>(n);
  res.w_plus = wplus2 / 2.0;
  res.w_minus = (total2 - wplus2) / 2.0;
  res.statistic = std::min(res.w_plus, res.w_minus);

  if (n <= static_cast<std::size_t>(kWilcoxonExactMaxN)) {
    // counts[s]: number of sign assignments whose doubled positive-rank sum is s.
    std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (long r : r2) {
      for (long s = reach; s >= 0; --s) {
        if (counts[static_cast<std::size_t>(s)] != 0.0) counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
      }
      reach += r;
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    const auto cdf = [&](long s) {  // P(W+ doubled <= s)
      double c = 0.0;
      for (long k = 0; k <= std::min(s, total2); ++k) c += counts[static_cast<std::size_t>(k)];
      return c / all;
    };
    const auto sf = [&](long s) {  // P(W+ doubled >= s)
      double c = 0.0;
      for (long k = std::max(s, 0L); k <= total2; ++k) c += counts[static_cast<std::size_t>(k)];
      return c / all;
    };
    res.exact = true;
    switch (alt) {
      case Alternative::TwoSided: res.p = std::min(1.0, 2.0 * cdf(std::min(wplus2, total2 - wplus2))); break;
      case Alternative::Greater: res.p = sf(wplus2); break;
      case Alternative::Less: res.p = cdf(wplus2); break;
    }
    return res;
  }

  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  const double se = std::sqrt(var);
  double dev = res.w_plus - mean;
  switch (alt) {
    case Alternative::TwoSided:
      if (dev != 0.0) dev -= std::copysign(0.5, dev);
      res.p = std::min(1.0, 2.0 * normal_sf(std::abs(dev) / se));
      break;
    case Alternative::Greater: res.p = normal_sf((dev - 0.5) / se); break;
    case Alternative::Less: res.p = 1.0 - normal_sf((dev + 0.5) / se); break;
  }
  return res;
}

}  // namespace beaconnav::evalkit
