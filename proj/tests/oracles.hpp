#pragma once

// Independent brute-force oracles and random fixtures. Deliberately naive: no memoization,
// no split pruning, full witness grids.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "mor/core.hpp"
#include "mor/losses.hpp"

namespace oracle {

using mor::FunctionClass;
using mor::Instance;
using mor::LabelKind;
using mor::LabelVector;

inline std::vector<std::size_t> members(unsigned mask, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if ((mask >> i) & 1U) out.push_back(i);
  }
  return out;
}

inline std::size_t distinct_count(const FunctionClass& cls) {
  std::set<std::vector<LabelVector>> s;
  for (const auto& f : cls.functions()) s.insert(f.values());
  return s.size();
}

inline std::size_t vc(const FunctionClass& cls) {
  const std::size_t n = cls.domain()->size();
  std::size_t best = 0;
  for (unsigned mask = 1; mask < (1U << n); ++mask) {
    auto S = members(mask, n);
    std::set<std::vector<double>> projections;
    for (const auto& f : cls.functions()) {
      std::vector<double> p;
      for (auto i : S) p.push_back(f.at_position(i)[0]);
      projections.insert(p);
    }
    if (projections.size() == (std::size_t{1} << S.size())) best = std::max(best, S.size());
  }
  return best;
}

inline std::size_t natarajan(const FunctionClass& cls) {
  const std::size_t n = cls.domain()->size();
  const auto Y = mor::image(cls);
  const std::size_t limit = distinct_count(cls);
  std::size_t best = 0;
  for (unsigned mask = 1; mask < (1U << n); ++mask) {
    auto S = members(mask, n);
    const std::size_t d = S.size();
    if ((std::size_t{1} << d) > limit || d <= best) continue;
    // Enumerate witness pairs (f_i, g_i) with f_i != g_i for every point.
    std::vector<std::size_t> fi(d, 0), gi(d, 0);
    std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
      if (i == d) {
        for (unsigned sigma = 0; sigma < (1U << d); ++sigma) {
          bool found = false;
          for (const auto& h : cls.functions()) {
            bool ok = true;
            for (std::size_t j = 0; j < d && ok; ++j) {
              const auto& want = ((sigma >> j) & 1U) ? Y[fi[j]] : Y[gi[j]];
              ok = h.at_position(S[j]) == want;
            }
            if (ok) {
              found = true;
              break;
            }
          }
          if (!found) return false;
        }
        return true;
      }
      for (std::size_t a = 0; a < Y.size(); ++a) {
        for (std::size_t b = 0; b < Y.size(); ++b) {
          if (a == b) continue;
          fi[i] = a;
          gi[i] = b;
          if (rec(i + 1)) return true;
        }
      }
      return false;
    };
    if (rec(0)) best = d;
  }
  return best;
}

// Multiclass Littlestone dimension by plain recursion; -1 for the empty set.
inline int mc_littlestone(const FunctionClass& cls, const std::vector<std::size_t>& V) {
  if (V.empty()) return -1;
  int best = 0;
  const auto Y = mor::image(cls);
  for (std::size_t p = 0; p < cls.domain()->size(); ++p) {
    std::vector<std::vector<std::size_t>> parts(Y.size());
    for (auto f : V) {
      auto it = std::find(Y.begin(), Y.end(), cls[f].at_position(p));
      parts[static_cast<std::size_t>(it - Y.begin())].push_back(f);
    }
    for (std::size_t a = 0; a < Y.size(); ++a) {
      for (std::size_t b = a + 1; b < Y.size(); ++b) {
        if (parts[a].empty() || parts[b].empty()) continue;
        if (parts[a].size() == V.size() || parts[b].size() == V.size()) continue;
        best = std::max(best, 1 + std::min(mc_littlestone(cls, parts[a]),
                                           mc_littlestone(cls, parts[b])));
      }
    }
  }
  return best;
}

inline int mc_littlestone(const FunctionClass& cls) {
  std::vector<std::size_t> all(cls.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return mc_littlestone(cls, all);
}

// Realized values at a position plus all pairwise midpoints.
inline std::vector<double> witness_grid(const FunctionClass& cls, std::size_t p) {
  std::set<double> vals;
  for (const auto& f : cls.functions()) vals.insert(f.at_position(p)[0]);
  std::set<double> grid(vals);
  for (double a : vals) {
    for (double b : vals) grid.insert(0.5 * (a + b));
  }
  return {grid.begin(), grid.end()};
}

inline std::size_t fat(const FunctionClass& cls, double gamma) {
  const double tol = 1e-12;
  const std::size_t n = cls.domain()->size();
  const std::size_t limit = distinct_count(cls);
  std::vector<std::vector<double>> grids;
  for (std::size_t p = 0; p < n; ++p) grids.push_back(witness_grid(cls, p));
  std::size_t best = 0;
  for (unsigned mask = 1; mask < (1U << n); ++mask) {
    auto S = members(mask, n);
    const std::size_t d = S.size();
    if ((std::size_t{1} << d) > limit || d <= best) continue;
    std::vector<double> r(d);
    std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
      if (i == d) {
        for (unsigned sigma = 0; sigma < (1U << d); ++sigma) {
          bool found = false;
          for (const auto& g : cls.functions()) {
            bool ok = true;
            for (std::size_t j = 0; j < d && ok; ++j) {
              const double s = ((sigma >> j) & 1U) ? 1.0 : -1.0;
              ok = s * (g.at_position(S[j])[0] - r[j]) >= gamma - tol;
            }
            if (ok) {
              found = true;
              break;
            }
          }
          if (!found) return false;
        }
        return true;
      }
      for (double w : grids[S[i]]) {
        r[i] = w;
        if (rec(i + 1)) return true;
      }
      return false;
    };
    if (rec(0)) best = d;
  }
  return best;
}

inline int seq_fat(const FunctionClass& cls, double gamma, const std::vector<std::size_t>& V,
                   int cap) {
  const double tol = 1e-12;
  if (V.empty()) return -1;
  if (cap == 0) return 0;
  int best = 0;
  for (std::size_t p = 0; p < cls.domain()->size(); ++p) {
    for (double r : witness_grid(cls, p)) {
      std::vector<std::size_t> up, down;
      for (auto f : V) {
        const double v = cls[f].at_position(p)[0];
        if (v - r >= gamma - tol) up.push_back(f);
        if (r - v >= gamma - tol) down.push_back(f);
      }
      if (up.empty() || down.empty()) continue;
      best = std::max(best, 1 + std::min(seq_fat(cls, gamma, up, cap - 1),
                                         seq_fat(cls, gamma, down, cap - 1)));
      if (best >= cap) return cap;
    }
  }
  return best;
}

inline int seq_fat(const FunctionClass& cls, double gamma, int cap) {
  std::vector<std::size_t> all(cls.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return seq_fat(cls, gamma, all, cap);
}

// ------------------------------------------------------------ fixtures

inline FunctionClass random_class(mor::Rng& rng, std::size_t n_x, std::size_t n_f, LabelKind kind,
                                  std::size_t K, const std::vector<double>& values) {
  std::vector<Instance> dom;
  for (std::size_t i = 0; i < n_x; ++i) dom.push_back(static_cast<Instance>(10 + i));
  std::vector<std::vector<LabelVector>> tables;
  for (std::size_t f = 0; f < n_f; ++f) {
    std::vector<LabelVector> t;
    for (std::size_t i = 0; i < n_x; ++i) {
      LabelVector y;
      for (std::size_t k = 0; k < K; ++k) y.v.push_back(values[rng.below(values.size())]);
      t.push_back(y);
    }
    tables.push_back(t);
  }
  return FunctionClass::from_tables(dom, kind, K, tables, "random");
}

inline mor::FiniteDistribution random_distribution(mor::Rng& rng, const FunctionClass& cls,
                                                   std::size_t atoms,
                                                   const std::vector<double>& label_values) {
  std::set<std::pair<Instance, LabelVector>> seen;
  std::vector<mor::Example> support;
  while (support.size() < atoms) {
    Instance x = cls.domain()->id(rng.below(cls.domain()->size()));
    LabelVector y;
    for (std::size_t k = 0; k < cls.output_dim(); ++k) {
      y.v.push_back(label_values[rng.below(label_values.size())]);
    }
    if (seen.emplace(x, y).second) support.push_back({x, y});
  }
  std::vector<double> w(atoms);
  double total = 0.0;
  for (auto& v : w) {
    v = 0.1 + rng.uniform();
    total += v;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < atoms; ++i) {
    w[i] /= total;
    acc += w[i];
  }
  w[atoms - 1] = 1.0 - acc;
  return mor::FiniteDistribution(support, w);
}

}  // namespace oracle
