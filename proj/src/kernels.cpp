#include "dqops/kernels.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace dqops::kernels {

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum;
}

namespace {

Label vote(std::span<const std::size_t> neighbours, std::span<const Label> labels,
           std::size_t class_count) {
  std::vector<std::size_t> counts(class_count, 0);
  for (auto idx : neighbours) ++counts[labels[idx]];
  // max_element returns the first maximum, i.e. the lowest class index.
  return static_cast<Label>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

Label nearest_vote(std::span<const double> sq_dist, std::span<const Label> labels,
                   std::size_t k, std::size_t class_count, std::vector<std::size_t>& scratch) {
  const std::size_t n = sq_dist.size();
  if (k == 1) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (sq_dist[i] < sq_dist[best]) best = i;
    }
    return labels[best];
  }
  scratch.resize(n);
  std::iota(scratch.begin(), scratch.end(), std::size_t{0});
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end(),
                    [&](std::size_t a, std::size_t b) {
                      return sq_dist[a] < sq_dist[b] || (sq_dist[a] == sq_dist[b] && a < b);
                    });
  return vote({scratch.data(), k}, labels, class_count);
}

namespace {

Label predict_one(const std::vector<FeatureVector>& train, std::span<const Label> labels,
                  const FeatureVector& query, std::size_t k, std::size_t class_count,
                  std::vector<double>& dist, std::vector<std::size_t>& scratch) {
  dist.resize(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) dist[i] = squared_distance(train[i], query);
  return nearest_vote(dist, labels, k, class_count, scratch);
}

}  // namespace

std::vector<Label> predict_batch(const std::vector<FeatureVector>& train,
                                 std::span<const Label> labels,
                                 const std::vector<FeatureVector>& queries, std::size_t k,
                                 std::size_t class_count) {
  std::vector<Label> out(queries.size());
  const auto count = static_cast<std::int64_t>(queries.size());
#pragma omp parallel
  {
    std::vector<double> dist;
    std::vector<std::size_t> scratch;
#pragma omp for schedule(static)
    for (std::int64_t q = 0; q < count; ++q) {
      out[static_cast<std::size_t>(q)] =
          predict_one(train, labels, queries[static_cast<std::size_t>(q)], k, class_count, dist, scratch);
    }
  }
  return out;
}

std::vector<Label> predict_batch_serial(const std::vector<FeatureVector>& train,
                                        std::span<const Label> labels,
                                        const std::vector<FeatureVector>& queries,
                                        std::size_t k, std::size_t class_count) {
  std::vector<Label> out(queries.size());
  std::vector<double> dist;
  std::vector<std::size_t> scratch;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    out[q] = predict_one(train, labels, queries[q], k, class_count, dist, scratch);
  }
  return out;
}

namespace {

std::uint64_t world_total(const VersionTable& table) {
  std::uint64_t total = 1;
  for (std::size_t r = 0; r < table.records(); ++r) {
    const auto v = static_cast<std::uint64_t>(table.versions(r));
    if (v == 0) throw DataError("record without any version");
    if (total > std::numeric_limits<std::uint64_t>::max() / v) {
      throw DataError("world count overflows 64 bits");
    }
    total *= v;
  }
  if (total > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw DataError("world count too large to enumerate");
  }
  return total;
}

// Picks the k nearest (distance, record) pairs of one world and votes.
class WorldVoter {
 public:
  WorldVoter(const VersionTable& table, std::size_t k)
      : table_(table), k_(k), best_(k), counts_(table.class_count) {}

  Label operator()(std::uint64_t world) {
    std::size_t filled = 0;
    for (std::size_t r = 0; r < table_.records(); ++r) {
      const std::uint64_t v = table_.versions(r);
      const double d = table_.sq_dist[table_.offset[r] + world % v];
      world /= v;
      // Records arrive in index order, so on equal distance the earlier
      // record stays ahead: strict < keeps the index tie-break.
      if (filled < k_) {
        std::size_t pos = filled++;
        while (pos > 0 && d < best_[pos - 1].first) {
          best_[pos] = best_[pos - 1];
          --pos;
        }
        best_[pos] = {d, r};
      } else if (d < best_[k_ - 1].first) {
        std::size_t pos = k_ - 1;
        while (pos > 0 && d < best_[pos - 1].first) {
          best_[pos] = best_[pos - 1];
          --pos;
        }
        best_[pos] = {d, r};
      }
    }
    std::fill(counts_.begin(), counts_.end(), 0);
    for (std::size_t i = 0; i < k_; ++i) ++counts_[table_.labels[best_[i].second]];
    return static_cast<Label>(std::max_element(counts_.begin(), counts_.end()) - counts_.begin());
  }

 private:
  const VersionTable& table_;
  std::size_t k_;
  std::vector<std::pair<double, std::size_t>> best_;
  std::vector<std::size_t> counts_;
};

}  // namespace

std::vector<std::uint64_t> tally_worlds(const VersionTable& table, std::size_t k) {
  const auto total = static_cast<std::int64_t>(world_total(table));
  std::vector<std::uint64_t> counts(table.class_count, 0);
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(table.class_count, 0);
    WorldVoter voter(table, k);
#pragma omp for schedule(static)
    for (std::int64_t w = 0; w < total; ++w) ++local[voter(static_cast<std::uint64_t>(w))];
#pragma omp critical
    for (std::size_t c = 0; c < local.size(); ++c) counts[c] += local[c];
  }
  return counts;
}

std::vector<std::uint64_t> tally_worlds_serial(const VersionTable& table, std::size_t k) {
  const std::uint64_t total = world_total(table);
  std::vector<std::uint64_t> counts(table.class_count, 0);
  WorldVoter voter(table, k);
  for (std::uint64_t w = 0; w < total; ++w) ++counts[voter(w)];
  return counts;
}

namespace {

using Poly = std::vector<std::uint64_t>;

// Visits every split of `remaining` neighbours across labels c..C-1 with
// m_c <= deg(P_c), accumulating the product of the chosen coefficients.
void accumulate_compositions(const std::vector<Poly>& polys, std::size_t label,
                             std::size_t remaining, std::uint64_t weight,
                             std::vector<std::size_t>& votes, std::vector<std::uint64_t>& counts) {
  if (weight == 0) return;
  if (label == polys.size()) {
    if (remaining != 0) return;
    const auto winner = std::max_element(votes.begin(), votes.end()) - votes.begin();
    counts[static_cast<std::size_t>(winner)] += weight;
    return;
  }
  const auto& poly = polys[label];
  const std::size_t top = std::min(remaining, poly.size() - 1);
  for (std::size_t m = 0; m <= top; ++m) {
    votes[label] += m;
    accumulate_compositions(polys, label + 1, remaining - m, weight * poly[m], votes, counts);
    votes[label] -= m;
  }
}

}  // namespace

std::vector<std::uint64_t> tally_sort_count(const VersionTable& table, std::size_t k) {
  const std::size_t n = table.records();
  const std::size_t classes = table.class_count;
  if (k == 0 || k > n) throw ConfigError("k must be in [1, records]");
  for (std::size_t r = 0; r < n; ++r) {
    if (table.versions(r) == 0) throw DataError("record without any version");
  }

  std::vector<std::uint64_t> counts(classes, 0);
  std::vector<Poly> polys(classes);
  std::vector<std::size_t> votes(classes, 0);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t v = table.offset[i]; v < table.offset[i + 1]; ++v) {
      const double boundary = table.sq_dist[v];
      for (auto& p : polys) p.assign(1, 1);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        std::uint64_t before = 0;
        for (std::size_t w = table.offset[j]; w < table.offset[j + 1]; ++w) {
          const double d = table.sq_dist[w];
          if (d < boundary || (d == boundary && j < i)) ++before;
        }
        const std::uint64_t after = table.versions(j) - before;
        // P <- P * (after + before * t), truncated to degree k-1.
        auto& p = polys[table.labels[j]];
        if (before > 0 && p.size() < k) p.push_back(0);
        for (std::size_t t = p.size(); t-- > 0;) {
          p[t] = p[t] * after + (t > 0 ? p[t - 1] * before : 0);
        }
      }
      std::fill(votes.begin(), votes.end(), 0);
      votes[table.labels[i]] = 1;
      accumulate_compositions(polys, 0, k - 1, 1, votes, counts);
    }
  }
  return counts;
}

}  // namespace dqops::kernels
