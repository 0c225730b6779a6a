#include "mor/dimensions.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <set>

#include "mor/errors.hpp"

namespace mor {

namespace {
constexpr double kTol = 1e-12;
}

// ---------------------------------------------------------------- Bitset

Bitset Bitset::full(std::size_t n) {
  Bitset b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i);
  return b;
}

std::size_t Bitset::count() const {
  std::size_t c = 0;
  for (auto w : w_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

bool Bitset::any() const {
  return std::any_of(w_.begin(), w_.end(), [](std::uint64_t w) { return w != 0; });
}

std::size_t Bitset::first() const {
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (w_[i]) return i * 64 + static_cast<std::size_t>(std::countr_zero(w_[i]));
  }
  return n_;
}

std::vector<std::size_t> Bitset::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < w_.size(); ++i) {
    std::uint64_t w = w_[i];
    while (w) {
      out.push_back(i * 64 + static_cast<std::size_t>(std::countr_zero(w)));
      w &= w - 1;
    }
  }
  return out;
}

Bitset Bitset::operator&(const Bitset& o) const {
  Bitset r = *this;
  for (std::size_t i = 0; i < w_.size(); ++i) r.w_[i] &= o.w_[i];
  return r;
}

Bitset Bitset::operator|(const Bitset& o) const {
  Bitset r = *this;
  for (std::size_t i = 0; i < w_.size(); ++i) r.w_[i] |= o.w_[i];
  return r;
}

std::size_t BitsetHash::operator()(const Bitset& b) const {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (auto w : b.words()) h = mix64(h ^ w);
  return static_cast<std::size_t>(h);
}

const char* to_string(DimensionKind kind) {
  switch (kind) {
    case DimensionKind::kVc:
      return "vc";
    case DimensionKind::kNatarajan:
      return "natarajan";
    case DimensionKind::kLittlestone:
      return "littlestone";
    case DimensionKind::kMcLittlestone:
      return "mc_littlestone";
    case DimensionKind::kFatShattering:
      return "fat_shattering";
    case DimensionKind::kSeqFatShattering:
      return "seq_fat_shattering";
  }
  return "?";
}

// ------------------------------------------------------ set shattering

namespace {

void require_scalar(const FunctionClass& cls, const char* what) {
  if (cls.output_dim() != 1) throw ArityError(std::string(what) + " needs a scalar class");
}

void require_kind(const FunctionClass& cls, LabelKind kind, const char* what) {
  if (cls.kind() != kind) {
    throw KindMismatchError(std::string(what) + " needs a " + to_string(kind) + " class");
  }
}

// One way of splitting the functions at a point into two sides.
struct Split {
  std::vector<std::int8_t> side;  // 1, 0, or -1 when the function is on neither side
  double witness = 0.0;
  LabelVector f_label, g_label;
};

class SetShatterSearch {
 public:
  SetShatterSearch(const FunctionClass& cls, std::vector<std::vector<Split>> splits)
      : cls_(cls), splits_(std::move(splits)) {}

  // Largest shattered subset of positions; fills chosen/pattern data.
  std::size_t run(ShatterCertificate& cert) {
    const std::size_t n = cls_.domain()->size();
    const std::size_t funcs = cls_.size();
    std::size_t best = 0;
    cert.pattern_function = {0};
    for (std::size_t d = 1; d <= n && (std::size_t{1} << d) <= funcs; ++d) {
      std::vector<std::size_t> comb(d);
      for (std::size_t i = 0; i < d; ++i) comb[i] = i;
      bool found = false;
      for (;;) {
        positions_ = comb;
        chosen_.assign(d, 0);
        std::vector<std::int32_t> pattern(funcs, 0);
        if (extend(0, pattern)) {
          found = true;
          fill(cert, d);
          break;
        }
        // next combination
        std::size_t i = d;
        while (i > 0 && comb[i - 1] == n - d + i - 1) --i;
        if (i == 0) break;
        ++comb[i - 1];
        for (std::size_t j = i; j < d; ++j) comb[j] = comb[j - 1] + 1;
      }
      if (!found) break;  // shattering is hereditary
      best = d;
    }
    return best;
  }

 private:
  bool extend(std::size_t i, const std::vector<std::int32_t>& pattern) {
    const std::size_t d = positions_.size();
    if (i == d) {
      final_pattern_ = pattern;
      return true;
    }
    const std::size_t need = std::size_t{1} << (i + 1);
    const auto& options = splits_[positions_[i]];
    std::vector<char> seen(need);
    std::vector<std::int32_t> next(pattern.size());
    for (std::size_t s = 0; s < options.size(); ++s) {
      std::fill(seen.begin(), seen.end(), 0);
      std::size_t distinct = 0;
      for (std::size_t f = 0; f < pattern.size(); ++f) {
        const std::int8_t side = options[s].side[f];
        if (pattern[f] < 0 || side < 0) {
          next[f] = -1;
          continue;
        }
        next[f] = pattern[f] | (static_cast<std::int32_t>(side) << i);
        if (!seen[next[f]]) {
          seen[next[f]] = 1;
          ++distinct;
        }
      }
      if (distinct != need) continue;
      chosen_[i] = s;
      if (extend(i + 1, next)) return true;
    }
    return false;
  }

  void fill(ShatterCertificate& cert, std::size_t d) {
    cert.set.clear();
    cert.witness_f.clear();
    cert.witness_g.clear();
    cert.witness_r.clear();
    for (std::size_t i = 0; i < d; ++i) {
      const Split& s = splits_[positions_[i]][chosen_[i]];
      cert.set.push_back(cls_.domain()->id(positions_[i]));
      cert.witness_f.push_back(s.f_label);
      cert.witness_g.push_back(s.g_label);
      cert.witness_r.push_back(s.witness);
    }
    cert.pattern_function.assign(std::size_t{1} << d, cls_.size());
    for (std::size_t f = 0; f < final_pattern_.size(); ++f) {
      if (final_pattern_[f] < 0) continue;
      auto& slot = cert.pattern_function[static_cast<std::size_t>(final_pattern_[f])];
      if (slot == cls_.size()) slot = f;
    }
  }

  const FunctionClass& cls_;
  std::vector<std::vector<Split>> splits_;
  std::vector<std::size_t> positions_;
  std::vector<std::size_t> chosen_;
  std::vector<std::int32_t> final_pattern_;
};

// Maps pattern functions of the deduplicated class back to indices of the input class.
void name_patterns(ShatterCertificate& cert, const FunctionClass& cls) {
  const auto originals = distinct_behaviors(cls);
  cert.pattern_names.clear();
  for (auto& f : cert.pattern_function) {
    f = originals[f];
    cert.pattern_names.push_back(cls[f].name());
  }
}

// Non-dominated margin splits at one position: down = {v <= a}, up = {v >= b}, b - a >= 2 gamma.
std::vector<std::pair<double, double>> margin_splits(std::vector<double> values, double gamma) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::map<std::size_t, double> by_b;  // b index -> largest a
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto it = std::lower_bound(values.begin(), values.end(), values[i] + 2.0 * gamma - kTol);
    if (it == values.end()) break;
    by_b[static_cast<std::size_t>(it - values.begin())] = values[i];
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& [bi, a] : by_b) out.emplace_back(a, values[bi]);
  return out;
}

}  // namespace

DimensionResult vc(const FunctionClass& cls) {
  require_scalar(cls, "vc");
  require_kind(cls, LabelKind::kBinary, "vc");
  FunctionClass dedup = deduplicate(cls);
  const std::size_t n = dedup.domain()->size();
  std::vector<std::vector<Split>> splits(n);
  for (std::size_t p = 0; p < n; ++p) {
    Split s;
    for (const auto& f : dedup.functions()) s.side.push_back(f.at_position(p)[0] > 0 ? 1 : 0);
    s.f_label = LabelVector{1.0};
    s.g_label = LabelVector{-1.0};
    splits[p].push_back(std::move(s));
  }
  DimensionResult r;
  r.certificate.kind = DimensionKind::kVc;
  r.value = SetShatterSearch(dedup, std::move(splits)).run(r.certificate);
  r.certificate.dimension = r.value;
  name_patterns(r.certificate, cls);
  return r;
}

DimensionResult natarajan(const FunctionClass& cls) {
  require_scalar(cls, "natarajan");
  FunctionClass dedup = deduplicate(cls);
  const std::size_t n = dedup.domain()->size();
  std::vector<std::vector<Split>> splits(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::set<LabelVector> realized;
    for (const auto& f : dedup.functions()) realized.insert(f.at_position(p));
    std::vector<LabelVector> labels(realized.begin(), realized.end());
    for (std::size_t a = 0; a < labels.size(); ++a) {
      for (std::size_t b = a + 1; b < labels.size(); ++b) {
        Split s;
        s.f_label = labels[a];
        s.g_label = labels[b];
        for (const auto& f : dedup.functions()) {
          const auto& y = f.at_position(p);
          s.side.push_back(y == labels[a] ? 1 : (y == labels[b] ? 0 : -1));
        }
        splits[p].push_back(std::move(s));
      }
    }
  }
  DimensionResult r;
  r.certificate.kind = DimensionKind::kNatarajan;
  r.value = SetShatterSearch(dedup, std::move(splits)).run(r.certificate);
  r.certificate.dimension = r.value;
  name_patterns(r.certificate, cls);
  return r;
}

DimensionResult fat_shattering(const FunctionClass& cls, double gamma) {
  require_scalar(cls, "fat_shattering");
  require_kind(cls, LabelKind::kReal, "fat_shattering");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("gamma must be in (0,1)");
  FunctionClass dedup = deduplicate(cls);
  const std::size_t n = dedup.domain()->size();
  std::vector<std::vector<Split>> splits(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::vector<double> values;
    for (const auto& f : dedup.functions()) values.push_back(f.at_position(p)[0]);
    for (const auto& [a, b] : margin_splits(values, gamma)) {
      Split s;
      s.witness = 0.5 * (a + b);
      for (double v : values) s.side.push_back(v >= b ? 1 : (v <= a ? 0 : -1));
      splits[p].push_back(std::move(s));
    }
  }
  DimensionResult r;
  r.certificate.kind = DimensionKind::kFatShattering;
  r.certificate.gamma = gamma;
  r.value = SetShatterSearch(dedup, std::move(splits)).run(r.certificate);
  r.certificate.dimension = r.value;
  r.certificate.witness_f.clear();
  r.certificate.witness_g.clear();
  name_patterns(r.certificate, cls);
  return r;
}

// ------------------------------------------------------ Littlestone

LittlestoneSearch::LittlestoneSearch(const FunctionClass& cls) : cls_(cls) {
  labels_ = image(cls_);
  const std::size_t n = cls_.domain()->size();
  label_of_.assign(n, std::vector<std::uint32_t>(cls_.size()));
  with_label_.assign(n, std::vector<Bitset>(labels_.size(), Bitset(cls_.size())));
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t f = 0; f < cls_.size(); ++f) {
      const auto l = static_cast<std::uint32_t>(label_id(cls_[f].at_position(p)));
      label_of_[p][f] = l;
      with_label_[p][l].set(f);
    }
  }
}

std::size_t LittlestoneSearch::label_id(const LabelVector& y) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), y);
  if (it == labels_.end() || !(*it == y)) return labels_.size();
  return static_cast<std::size_t>(it - labels_.begin());
}

Bitset LittlestoneSearch::split(const Bitset& v, std::size_t pos, std::size_t l) const {
  return v & with_label_[pos][l];
}

int LittlestoneSearch::dimension(const Bitset& v) {
  const std::size_t count = v.count();
  if (count == 0) return -1;
  if (count == 1) return 0;
  if (auto it = memo_.find(v); it != memo_.end()) return it->second;
  const int cap = static_cast<int>(std::floor(std::log2(static_cast<double>(count))));
  int best = 0;
  for (std::size_t p = 0; p < with_label_.size() && best < cap; ++p) {
    int top1 = -1;
    int top2 = -1;
    std::size_t parts = 0;
    for (std::size_t l = 0; l < labels_.size(); ++l) {
      Bitset part = split(v, p, l);
      if (!part.any()) continue;
      ++parts;
      if (part == v) break;
      int d = dimension(part);
      if (d > top1) {
        top2 = top1;
        top1 = d;
      } else if (d > top2) {
        top2 = d;
      }
    }
    if (parts >= 2 && top2 >= 0) best = std::max(best, 1 + top2);
  }
  if (best > cap) throw std::logic_error("Littlestone dimension exceeds log2 |class|");
  memo_.emplace(v, best);
  return best;
}

int LittlestoneSearch::build(const Bitset& v, int depth, ShatterCertificate& cert) {
  const int idx = static_cast<int>(cert.nodes.size());
  cert.nodes.emplace_back();
  if (depth == 0) {
    cert.nodes[idx].function = static_cast<long>(v.first());
    cert.nodes[idx].x = 0;
    return idx;
  }
  for (std::size_t p = 0; p < with_label_.size(); ++p) {
    std::vector<std::size_t> good;
    for (std::size_t l = 0; l < labels_.size(); ++l) {
      Bitset part = split(v, p, l);
      if (part.any() && !(part == v) && dimension(part) >= depth - 1) good.push_back(l);
      if (good.size() == 2) break;
    }
    if (good.size() < 2) continue;
    cert.nodes[idx].x = cls_.domain()->id(p);
    for (int side = 0; side < 2; ++side) {
      cert.nodes[idx].label[side] = labels_[good[side]];
      const int child = build(split(v, p, good[side]), depth - 1, cert);
      cert.nodes[idx].child[side] = child;
    }
    return idx;
  }
  throw std::logic_error("no split realizes the memoized Littlestone dimension");
}

ShatterCertificate LittlestoneSearch::tree(const Bitset& v) {
  ShatterCertificate cert;
  cert.kind = DimensionKind::kMcLittlestone;
  const int d = dimension(v);
  if (d < 0) throw ParameterError("empty version space has no tree");
  cert.dimension = static_cast<std::size_t>(d);
  build(v, d, cert);
  return cert;
}

DimensionResult littlestone(const FunctionClass& cls) {
  require_scalar(cls, "littlestone");
  require_kind(cls, LabelKind::kBinary, "littlestone");
  LittlestoneSearch search(cls);
  DimensionResult r;
  r.certificate = search.tree(Bitset::full(cls.size()));
  r.certificate.kind = DimensionKind::kLittlestone;
  r.value = r.certificate.dimension;
  return r;
}

DimensionResult mc_littlestone(const FunctionClass& cls) {
  LittlestoneSearch search(cls);
  DimensionResult r;
  r.certificate = search.tree(Bitset::full(cls.size()));
  r.value = r.certificate.dimension;
  return r;
}

// ------------------------------------------- sequential fat-shattering

namespace {

class SeqFatSearch {
 public:
  SeqFatSearch(const FunctionClass& cls, double gamma) : cls_(cls), gamma_(gamma) {
    const std::size_t n = cls_.domain()->size();
    values_.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
      for (const auto& f : cls_.functions()) values_[p].push_back(f.at_position(p)[0]);
    }
  }

  // min(true depth, cap); -1 for an empty set.
  int depth(const Bitset& v, int cap) {
    if (!v.any()) return -1;
    if (cap == 0) return 0;
    if (auto it = memo_.find(v); it != memo_.end()) {
      const auto [value, exact] = it->second;
      if (exact) return std::min(value, cap);
      if (value >= cap) return cap;
    }
    int best = 0;
    for (std::size_t p = 0; p < values_.size() && best < cap; ++p) {
      for (const auto& s : splits(v, p)) {
        const int d = 1 + std::min(depth(s.down, cap - 1), depth(s.up, cap - 1));
        best = std::max(best, d);
        if (best >= cap) break;
      }
    }
    memo_[v] = {best, best < cap};
    return best;
  }

  int build(const Bitset& v, int d, ShatterCertificate& cert) {
    const int idx = static_cast<int>(cert.nodes.size());
    cert.nodes.emplace_back();
    if (d == 0) {
      cert.nodes[idx].function = static_cast<long>(v.first());
      return idx;
    }
    for (std::size_t p = 0; p < values_.size(); ++p) {
      for (const auto& s : splits(v, p)) {
        if (depth(s.down, d - 1) < d - 1 || depth(s.up, d - 1) < d - 1) continue;
        cert.nodes[idx].x = cls_.domain()->id(p);
        cert.nodes[idx].witness = s.witness;
        cert.nodes[idx].label[0] = LabelVector{-1.0};
        cert.nodes[idx].label[1] = LabelVector{1.0};
        const int lo = build(s.down, d - 1, cert);
        cert.nodes[idx].child[0] = lo;
        const int hi = build(s.up, d - 1, cert);
        cert.nodes[idx].child[1] = hi;
        return idx;
      }
    }
    throw std::logic_error("no split realizes the memoized sequential fat depth");
  }

 private:
  struct MarginSplit {
    Bitset down, up;
    double witness;
  };

  std::vector<MarginSplit> splits(const Bitset& v, std::size_t p) const {
    std::vector<double> vals;
    for (std::size_t f : v.indices()) vals.push_back(values_[p][f]);
    std::vector<MarginSplit> out;
    for (const auto& [a, b] : margin_splits(vals, gamma_)) {
      MarginSplit s{Bitset(cls_.size()), Bitset(cls_.size()), 0.5 * (a + b)};
      for (std::size_t f : v.indices()) {
        if (values_[p][f] <= a) s.down.set(f);
        if (values_[p][f] >= b) s.up.set(f);
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  const FunctionClass& cls_;
  double gamma_;
  std::vector<std::vector<double>> values_;
  std::unordered_map<Bitset, std::pair<int, bool>, BitsetHash> memo_;
};

}  // namespace

DimensionResult seq_fat_shattering(const FunctionClass& cls, double gamma, std::size_t max_depth) {
  require_scalar(cls, "seq_fat_shattering");
  require_kind(cls, LabelKind::kReal, "seq_fat_shattering");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("gamma must be in (0,1)");
  SeqFatSearch search(cls, gamma);
  const Bitset all = Bitset::full(cls.size());
  const int probe = search.depth(all, static_cast<int>(max_depth) + 1);
  DimensionResult r;
  r.truncated = probe > static_cast<int>(max_depth);
  r.value = static_cast<std::size_t>(std::min(probe, static_cast<int>(max_depth)));
  r.certificate.kind = DimensionKind::kSeqFatShattering;
  r.certificate.gamma = gamma;
  r.certificate.dimension = r.value;
  search.build(all, static_cast<int>(r.value), r.certificate);
  return r;
}

// ------------------------------------------------------------ replay

namespace {

bool replay_tree(const ShatterCertificate& cert, const FunctionClass& cls, int node,
                 std::vector<std::pair<int, int>>& path, std::size_t depth) {
  const auto& nd = cert.nodes[node];
  if (nd.function >= 0) {
    if (depth != cert.dimension) return false;
    if (static_cast<std::size_t>(nd.function) >= cls.size()) return false;
    const auto& f = cls[static_cast<std::size_t>(nd.function)];
    for (const auto& [n, side] : path) {
      const auto& inner = cert.nodes[n];
      if (!cls.domain()->contains(inner.x)) return false;
      const auto& y = f(inner.x);
      if (cert.kind == DimensionKind::kSeqFatShattering) {
        const double v = y[0];
        if (side == 1 && !(v >= inner.witness + cert.gamma - kTol)) return false;
        if (side == 0 && !(v <= inner.witness - cert.gamma + kTol)) return false;
      } else if (!(y == inner.label[side])) {
        return false;
      }
    }
    return true;
  }
  if (cert.kind != DimensionKind::kSeqFatShattering && nd.label[0] == nd.label[1]) return false;
  for (int side = 0; side < 2; ++side) {
    if (nd.child[side] < 0) return false;
    path.emplace_back(node, side);
    const bool ok = replay_tree(cert, cls, nd.child[side], path, depth + 1);
    path.pop_back();
    if (!ok) return false;
  }
  return true;
}

}  // namespace

bool replay(const ShatterCertificate& cert, const FunctionClass& cls) {
  switch (cert.kind) {
    case DimensionKind::kLittlestone:
    case DimensionKind::kMcLittlestone:
    case DimensionKind::kSeqFatShattering: {
      if (cert.nodes.empty()) return false;
      std::vector<std::pair<int, int>> path;
      return replay_tree(cert, cls, 0, path, 0);
    }
    default:
      break;
  }
  const std::size_t d = cert.set.size();
  if (d != cert.dimension) return false;
  if (cert.pattern_function.size() != (std::size_t{1} << d)) return false;
  for (std::size_t mask = 0; mask < cert.pattern_function.size(); ++mask) {
    if (cert.pattern_function[mask] >= cls.size()) return false;
    const Predictor* f = &cls[cert.pattern_function[mask]];
    for (std::size_t i = 0; i < d; ++i) {
      const bool up = (mask >> i) & 1U;
      const auto& y = (*f)(cert.set[i]);
      switch (cert.kind) {
        case DimensionKind::kVc:
          if (y[0] != (up ? 1.0 : -1.0)) return false;
          break;
        case DimensionKind::kNatarajan:
          if (cert.witness_f[i] == cert.witness_g[i]) return false;
          if (!(y == (up ? cert.witness_f[i] : cert.witness_g[i]))) return false;
          break;
        case DimensionKind::kFatShattering:
          if (up && !(y[0] >= cert.witness_r[i] + cert.gamma - kTol)) return false;
          if (!up && !(y[0] <= cert.witness_r[i] - cert.gamma + kTol)) return false;
          break;
        default:
          return false;
      }
    }
  }
  return true;
}

// --------------------------------------------------------- Rademacher

RademacherEstimate rademacher_estimate(const FunctionClass& cls, const FiniteDistribution& dist,
                                       const LossSpec& loss, std::size_t n, std::size_t trials,
                                       std::uint64_t seed) {
  if (trials == 0) throw ParameterError("rademacher_estimate needs trials >= 1");
  if (n == 0) throw ParameterError("rademacher_estimate needs n >= 1");
  const Rng root(seed);
  std::vector<double> values;
  values.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng r = root.derive(t);
    Rng sample_rng = r.derive("sample");
    Rng sign_rng = r.derive("sigma");
    Sample s = dist.sample(sample_rng, n);
    std::vector<int> sigma(n);
    for (auto& v : sigma) v = sign_rng.rademacher();
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& f : cls.functions()) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += sigma[i] * loss(f(s[i].x), s[i].y);
      sup = std::max(sup, acc / static_cast<double>(n));
    }
    values.push_back(sup);
  }
  RademacherEstimate est;
  for (double v : values) est.mean += v;
  est.mean /= static_cast<double>(trials);
  if (trials > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / static_cast<double>(trials - 1) / static_cast<double>(trials));
  }
  return est;
}

}  // namespace mor
