#include "trajagent/augment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "trajagent/error.hpp"
#include "trajagent/rng.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;

namespace {

HyperParam int_param(std::string name, std::int64_t def, double lo, double hi, std::string doc,
                     std::vector<std::int64_t> grid) {
  HyperParam p{std::move(name), ParamType::kInt, def, lo, hi, {}, std::move(doc), {}};
  for (auto g : grid) p.grid.emplace_back(g);
  return p;
}

HyperParam float_param(std::string name, double def, double lo, double hi, std::string doc, std::vector<double> grid) {
  HyperParam p{std::move(name), ParamType::kFloat, def, lo, hi, {}, std::move(doc), {}};
  for (auto g : grid) p.grid.emplace_back(g);
  return p;
}

HyperParam choice_param(std::string name, std::string def, std::vector<std::string> choices, std::string doc) {
  HyperParam p{std::move(name), ParamType::kChoice, def, 0, 0, choices, std::move(doc), {}};
  for (auto& c : choices) p.grid.emplace_back(c);
  return p;
}

std::vector<OperatorSpec> build_catalog() {
  std::vector<OperatorSpec> c;
  c.push_back({ops::kCrop,
               "Ti-crop",
               "Per session long enough (length >= segment length + crop_n_times), add crop_n_times contiguous "
               "segments of equal length as extra training sequences, chosen by the variance of their time "
               "intervals (lowest first for 'minimum', highest first for 'maximum').",
               {int_param("crop_nums", 2, 1, 1000, "segment length in points when crop_ratio is 0", {2, 3, 4, 5}),
                float_param("crop_ratio", 0.0, 0.0, 1.0,
                            "if > 0, segment length = ceil(crop_ratio * session length), overriding crop_nums",
                            {0.0, 0.3, 0.5}),
                int_param("crop_n_times", 2, 0, 50, "number of segments extracted per session", {0, 1, 2, 3}),
                choice_param("crop_time_sort", "minimum", {"minimum", "maximum"},
                             "rank candidate segments by ascending (minimum) or descending (maximum) time-interval "
                             "variance")}});
  c.push_back({ops::kInsertUnvisited,
               "Ti-insert_unvisited",
               "Insert points at locations the entity never visited, drawn uniformly; each inserted timestamp is "
               "the midpoint of its neighbours.",
               {int_param("n_insert", 1, 0, 100, "points inserted per session", {0, 1, 2, 3})}});
  c.push_back({ops::kInsertRandom,
               "Ti-insert_random",
               "Insert points at locations drawn uniformly from the whole vocabulary.",
               {int_param("n_insert", 1, 0, 100, "points inserted per session", {0, 1, 2, 3})}});
  c.push_back({ops::kInsertFrequent,
               "Ti-insert_frequent",
               "Insert points drawn from the entity's most frequently visited locations.",
               {int_param("n_insert", 1, 0, 100, "points inserted per session", {0, 1, 2, 3}),
                int_param("top_m", 3, 1, 1000, "size of the frequent-location pool", {1, 3, 5})}});
  c.push_back({ops::kReplaceNearby,
               "Ti-replace_nearby",
               "Replace a fraction of points with another location within radius_m meters of the original.",
               {float_param("replace_ratio", 0.1, 0.0, 1.0, "fraction of points replaced per session",
                            {0.0, 0.05, 0.1, 0.2}),
                float_param("radius_m", 500.0, 1.0, 100000.0, "search radius in meters", {200.0, 500.0, 1000.0, 2000.0})}});
  c.push_back({ops::kMask,
               "Ti-mask",
               "Replace a fraction of location ids with a reserved [MASK] token.",
               {float_param("mask_ratio", 0.1, 0.0, 1.0, "fraction of points masked per session", {0.0, 0.05, 0.1, 0.2})}});
  c.push_back({ops::kSplit,
               "Ti-split",
               "Split sessions longer than max_len into consecutive chunks of at most max_len points.",
               {int_param("max_len", 20, 0, 100000, "chunk length; 0 disables splitting", {0, 5, 10, 20})}});
  c.push_back({ops::kSubsample,
               "Ti-subsample",
               "Keep each interior point independently with probability keep_prob; first and last points are "
               "always kept.",
               {float_param("keep_prob", 0.9, 0.0, 1.0, "probability of keeping an interior point", {1.0, 0.9, 0.8, 0.7})}});
  c.push_back({ops::kTimePerturb,
               "Ti-time_perturb",
               "Shift interior timestamps by uniform noise in [-jitter_s, jitter_s] seconds, then re-sort.",
               {int_param("jitter_s", 60, 0, 86400, "maximum absolute shift in seconds", {0, 60, 600, 3600})}});
  c.push_back({ops::kMerge,
               "Ti-merge",
               "Concatenate pairs of consecutive sessions of the same entity separated by less than merge_gap_s "
               "seconds.",
               {int_param("merge_gap_s", 86400, 0, 100000000, "maximum gap between merged sessions in seconds",
                          {0, 86400, 259200, 604800})}});
  return c;
}

std::int64_t get_int(const ParamMap& p, const std::string& name) { return std::get<std::int64_t>(p.at(name)); }
double get_float(const ParamMap& p, const std::string& name) { return std::get<double>(p.at(name)); }
const std::string& get_choice(const ParamMap& p, const std::string& name) { return std::get<std::string>(p.at(name)); }

// Per-entity bookkeeping shared by operators that mint new session ordinals.
std::map<std::string, int> max_sessions(const std::vector<Trajectory>& trajs) {
  std::map<std::string, int> out;
  for (const auto& t : trajs) {
    auto [it, inserted] = out.try_emplace(t.entity_id, t.session);
    if (!inserted) it->second = std::max(it->second, t.session);
  }
  return out;
}

std::size_t ratio_count(double ratio, std::size_t n) {
  return std::min(n, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))));
}

std::vector<std::size_t> pick_positions(Rng& rng, std::size_t n, std::size_t count) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Point point_at(const Location& loc, std::int64_t ts) {
  Point p;
  p.lat = loc.lat;
  p.lon = loc.lon;
  p.timestamp = ts;
  p.loc_id = loc.id;
  p.category = loc.category;
  return p;
}

void insert_points(Trajectory& t, Rng& rng, std::size_t n_insert, const std::vector<std::size_t>& pool,
                   const Vocabulary& vocab) {
  if (pool.empty() || t.points.size() < 2) return;
  for (std::size_t k = 0; k < n_insert; ++k) {
    const std::size_t gap = rng.index(t.points.size() - 1);
    const auto& a = t.points[gap];
    const auto& b = t.points[gap + 1];
    const std::int64_t ts = a.timestamp + (b.timestamp - a.timestamp) / 2;
    const Location& loc = vocab.at(pool[rng.index(pool.size())]);
    t.points.insert(t.points.begin() + static_cast<std::ptrdiff_t>(gap + 1), point_at(loc, ts));
  }
}

std::vector<std::size_t> real_locations(const Vocabulary& vocab) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab.at(i).id != kMaskToken) out.push_back(i);
  }
  return out;
}

std::map<std::string, std::map<std::size_t, std::size_t>> visit_counts(const Dataset& ds) {
  std::map<std::string, std::map<std::size_t, std::size_t>> out;
  for (const auto& t : ds.trajectories) {
    auto& counts = out[t.entity_id];
    for (const auto& p : t.points) {
      if (auto idx = ds.vocabulary.find(p.loc_id)) ++counts[*idx];
    }
  }
  return out;
}

__extension__ typedef __int128 Int128;

// Exact comparison key for segment time-interval variance: for segments of
// equal length n (gaps m = n-1), m*sum(g^2) - (sum g)^2 orders the variances.
Int128 variance_key(const std::vector<Point>& pts, std::size_t start, std::size_t len) {
  if (len < 2) return 0;
  Int128 s1 = 0, s2 = 0;
  for (std::size_t i = start + 1; i < start + len; ++i) {
    const Int128 g = pts[i].timestamp - pts[i - 1].timestamp;
    s1 += g;
    s2 += g * g;
  }
  const Int128 m = static_cast<Int128>(len - 1);
  return m * s2 - s1 * s1;
}

Dataset op_crop(const Dataset& ds, const ParamMap& p) {
  const auto n_times = static_cast<std::size_t>(get_int(p, "crop_n_times"));
  const double ratio = get_float(p, "crop_ratio");
  const auto nums = static_cast<std::size_t>(get_int(p, "crop_nums"));
  const bool descending = get_choice(p, "crop_time_sort") == "maximum";
  if (n_times == 0) return ds;

  auto next_session = max_sessions(ds.trajectories);
  std::vector<Trajectory> out;
  for (const auto& t : ds.trajectories) {
    out.push_back(t);
    const std::size_t len = t.points.size();
    const std::size_t seg =
        ratio > 0 ? static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(len))) : nums;
    if (seg == 0 || len < seg + n_times) continue;
    std::vector<std::pair<Int128, std::size_t>> cand;
    for (std::size_t s = 0; s + seg <= len; ++s) cand.emplace_back(variance_key(t.points, s, seg), s);
    std::stable_sort(cand.begin(), cand.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return descending ? a.first > b.first : a.first < b.first;
      return a.second < b.second;
    });
    for (std::size_t k = 0; k < n_times && k < cand.size(); ++k) {
      Trajectory piece;
      piece.entity_id = t.entity_id;
      piece.kind = t.kind;
      piece.session = ++next_session[t.entity_id];
      const auto begin = t.points.begin() + static_cast<std::ptrdiff_t>(cand[k].second);
      piece.points.assign(begin, begin + static_cast<std::ptrdiff_t>(seg));
      out.push_back(std::move(piece));
    }
  }
  return with_trajectories(ds, std::move(out));
}

Dataset op_insert(const Dataset& ds, int index, const ParamMap& p, Rng& rng) {
  const auto n_insert = static_cast<std::size_t>(get_int(p, "n_insert"));
  if (n_insert == 0) return ds;
  const auto all = real_locations(ds.vocabulary);
  const auto counts = visit_counts(ds);
  std::map<std::string, std::vector<std::size_t>> pools;
  for (const auto& [entity, visits] : counts) {
    std::vector<std::size_t> pool;
    if (index == ops::kInsertRandom) {
      pool = all;
    } else if (index == ops::kInsertUnvisited) {
      for (auto loc : all) {
        if (!visits.count(loc)) pool.push_back(loc);
      }
    } else {
      std::vector<std::pair<std::size_t, std::size_t>> ranked;  // (count, loc)
      for (const auto& [loc, n] : visits) {
        if (ds.vocabulary.at(loc).id != kMaskToken) ranked.emplace_back(n, loc);
      }
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      const auto m = static_cast<std::size_t>(get_int(p, "top_m"));
      for (std::size_t i = 0; i < ranked.size() && i < m; ++i) pool.push_back(ranked[i].second);
    }
    pools.emplace(entity, std::move(pool));
  }
  std::vector<Trajectory> out = ds.trajectories;
  for (auto& t : out) insert_points(t, rng, n_insert, pools[t.entity_id], ds.vocabulary);
  return with_trajectories(ds, std::move(out));
}

class NeighborIndex {
 public:
  NeighborIndex(const Vocabulary& vocab, double radius_m) : vocab_(vocab), radius_(radius_m) {
    cell_deg_ = std::max(radius_m / 111320.0, 1e-6);
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      if (vocab.at(i).id == kMaskToken) continue;
      buckets_[key(cell(vocab.at(i).lat), cell(vocab.at(i).lon))].push_back(i);
    }
  }

  // Locations within the radius, excluding `origin`, in ascending index order.
  const std::vector<std::size_t>& around(std::size_t origin) {
    auto it = cache_.find(origin);
    if (it != cache_.end()) return it->second;
    const auto& o = vocab_.at(origin);
    // Longitude cells shrink with latitude; widen the scan accordingly.
    const double shrink = std::max(std::cos(o.lat * 3.14159265358979323846 / 180.0), 1e-3);
    const long long lon_reach = static_cast<long long>(std::ceil(1.0 / shrink));
    std::vector<std::size_t> found;
    const long long r0 = cell(o.lat), c0 = cell(o.lon);
    for (long long dr = -1; dr <= 1; ++dr) {
      for (long long dc = -lon_reach; dc <= lon_reach; ++dc) {
        auto b = buckets_.find(key(r0 + dr, c0 + dc));
        if (b == buckets_.end()) continue;
        for (auto idx : b->second) {
          if (idx == origin) continue;
          const auto& l = vocab_.at(idx);
          if (haversine_m(o.lat, o.lon, l.lat, l.lon) <= radius_) found.push_back(idx);
        }
      }
    }
    std::sort(found.begin(), found.end());
    return cache_.emplace(origin, std::move(found)).first->second;
  }

 private:
  long long cell(double deg) const { return static_cast<long long>(std::floor(deg / cell_deg_)); }
  static std::pair<long long, long long> key(long long r, long long c) { return {r, c}; }

  const Vocabulary& vocab_;
  double radius_;
  double cell_deg_;
  std::map<std::pair<long long, long long>, std::vector<std::size_t>> buckets_;
  std::unordered_map<std::size_t, std::vector<std::size_t>> cache_;
};

Dataset op_replace_nearby(const Dataset& ds, const ParamMap& p, Rng& rng) {
  const double ratio = get_float(p, "replace_ratio");
  if (ratio <= 0) return ds;
  NeighborIndex index(ds.vocabulary, get_float(p, "radius_m"));
  std::vector<Trajectory> out = ds.trajectories;
  for (auto& t : out) {
    for (auto pos : pick_positions(rng, t.points.size(), ratio_count(ratio, t.points.size()))) {
      auto& pt = t.points[pos];
      const auto origin = ds.vocabulary.find(pt.loc_id);
      if (!origin || pt.loc_id == kMaskToken) continue;
      const auto& near = index.around(*origin);
      if (near.empty()) continue;
      const Location& loc = ds.vocabulary.at(near[rng.index(near.size())]);
      pt = point_at(loc, pt.timestamp);
    }
  }
  return with_trajectories(ds, std::move(out));
}

Dataset op_mask(const Dataset& ds, const ParamMap& p, Rng& rng) {
  const double ratio = get_float(p, "mask_ratio");
  if (ratio <= 0) return ds;
  std::vector<Trajectory> out = ds.trajectories;
  bool masked_any = false;
  for (auto& t : out) {
    for (auto pos : pick_positions(rng, t.points.size(), ratio_count(ratio, t.points.size()))) {
      t.points[pos].loc_id = std::string(kMaskToken);
      t.points[pos].category.clear();
      masked_any = true;
    }
  }
  Dataset result = with_trajectories(ds, std::move(out));
  if (masked_any) result.vocabulary.add(Location{std::string(kMaskToken), 0.0, 0.0, ""});
  return result;
}

Dataset op_split(const Dataset& ds, const ParamMap& p) {
  const auto max_len = static_cast<std::size_t>(get_int(p, "max_len"));
  if (max_len == 0) return ds;
  auto next_session = max_sessions(ds.trajectories);
  std::vector<Trajectory> out;
  for (const auto& t : ds.trajectories) {
    if (t.points.size() <= max_len) {
      out.push_back(t);
      continue;
    }
    for (std::size_t start = 0; start < t.points.size(); start += max_len) {
      Trajectory chunk;
      chunk.entity_id = t.entity_id;
      chunk.kind = t.kind;
      chunk.session = start == 0 ? t.session : ++next_session[t.entity_id];
      const std::size_t end = std::min(t.points.size(), start + max_len);
      chunk.points.assign(t.points.begin() + static_cast<std::ptrdiff_t>(start),
                          t.points.begin() + static_cast<std::ptrdiff_t>(end));
      out.push_back(std::move(chunk));
    }
  }
  return with_trajectories(ds, std::move(out));
}

Dataset op_subsample(const Dataset& ds, const ParamMap& p, Rng& rng) {
  const double keep = get_float(p, "keep_prob");
  if (keep >= 1.0) return ds;
  std::vector<Trajectory> out = ds.trajectories;
  for (auto& t : out) {
    if (t.points.size() <= 2) continue;
    std::vector<Point> kept;
    kept.push_back(t.points.front());
    for (std::size_t i = 1; i + 1 < t.points.size(); ++i) {
      if (rng.bernoulli(keep)) kept.push_back(t.points[i]);
    }
    kept.push_back(t.points.back());
    t.points = std::move(kept);
  }
  return with_trajectories(ds, std::move(out));
}

Dataset op_time_perturb(const Dataset& ds, const ParamMap& p, Rng& rng) {
  const std::int64_t jitter = get_int(p, "jitter_s");
  if (jitter == 0) return ds;
  std::vector<Trajectory> out = ds.trajectories;
  for (auto& t : out) {
    for (std::size_t i = 1; i + 1 < t.points.size(); ++i) {
      t.points[i].timestamp = std::max<std::int64_t>(0, t.points[i].timestamp + rng.range(-jitter, jitter));
    }
    std::stable_sort(t.points.begin(), t.points.end(),
                     [](const Point& a, const Point& b) { return a.timestamp < b.timestamp; });
  }
  return with_trajectories(ds, std::move(out));
}

Dataset op_merge(const Dataset& ds, const ParamMap& p) {
  const std::int64_t max_gap = get_int(p, "merge_gap_s");
  if (max_gap == 0) return ds;
  // Group per entity in time order, keeping first-appearance entity order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> by_entity;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    auto [it, inserted] = by_entity.try_emplace(ds.trajectories[i].entity_id);
    if (inserted) order.push_back(ds.trajectories[i].entity_id);
    it->second.push_back(i);
  }
  std::vector<Trajectory> out;
  for (const auto& entity : order) {
    auto idx = by_entity[entity];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return ds.trajectories[a].points.front().timestamp < ds.trajectories[b].points.front().timestamp;
    });
    for (std::size_t k = 0; k < idx.size(); ++k) {
      Trajectory cur = ds.trajectories[idx[k]];
      if (k + 1 < idx.size()) {
        const auto& next = ds.trajectories[idx[k + 1]];
        if (next.points.front().timestamp - cur.points.back().timestamp < max_gap) {
          cur.points.insert(cur.points.end(), next.points.begin(), next.points.end());
          std::stable_sort(cur.points.begin(), cur.points.end(),
                           [](const Point& a, const Point& b) { return a.timestamp < b.timestamp; });
          ++k;
        }
      }
      out.push_back(std::move(cur));
    }
  }
  return with_trajectories(ds, std::move(out));
}

void check_param(const HyperParam& hp, const ParamValue& v) {
  auto out_of_range = [&](const std::string& why) {
    throw Error(ErrorCode::kParamOutOfRange, hp.name + ": " + why);
  };
  switch (hp.type) {
    case ParamType::kInt: {
      const auto* i = std::get_if<std::int64_t>(&v);
      if (!i) out_of_range("expected an integer");
      if (static_cast<double>(*i) < hp.min || static_cast<double>(*i) > hp.max) {
        out_of_range(std::to_string(*i) + " outside [" + format_double(hp.min) + ", " + format_double(hp.max) + "]");
      }
      break;
    }
    case ParamType::kFloat: {
      const auto* d = std::get_if<double>(&v);
      if (!d) out_of_range("expected a float");
      if (!std::isfinite(*d) || *d < hp.min || *d > hp.max) {
        out_of_range(format_double(*d) + " outside [" + format_double(hp.min) + ", " + format_double(hp.max) + "]");
      }
      break;
    }
    case ParamType::kChoice: {
      const auto* s = std::get_if<std::string>(&v);
      if (!s) out_of_range("expected one of the choices");
      if (std::find(hp.choices.begin(), hp.choices.end(), *s) == hp.choices.end()) {
        out_of_range("'" + *s + "' is not one of " + join(hp.choices, ", "));
      }
      break;
    }
  }
}

}  // namespace

const HyperParam* OperatorSpec::find(const std::string& param) const {
  for (const auto& p : params) {
    if (p.name == param) return &p;
  }
  return nullptr;
}

const std::vector<OperatorSpec>& list_operators() {
  static const std::vector<OperatorSpec> catalog = build_catalog();
  return catalog;
}

const OperatorSpec& operator_spec(int index) {
  if (index < 1 || index > kOperatorCount) {
    throw Error(ErrorCode::kUnknownOperator, "operator index " + std::to_string(index));
  }
  return list_operators()[static_cast<std::size_t>(index - 1)];
}

ParamMap resolve_params(int index, const ParamMap& supplied) {
  const auto& spec = operator_spec(index);
  ParamMap out;
  for (const auto& hp : spec.params) out[hp.name] = hp.default_value;
  for (const auto& [name, value] : supplied) {
    const HyperParam* hp = spec.find(name);
    if (!hp) throw Error(ErrorCode::kParamOutOfRange, name + ": not a parameter of " + spec.name);
    // Integral floats are accepted for int parameters and ints for floats.
    ParamValue v = value;
    if (hp->type == ParamType::kFloat) {
      if (const auto* i = std::get_if<std::int64_t>(&value)) v = static_cast<double>(*i);
    } else if (hp->type == ParamType::kInt) {
      if (const auto* d = std::get_if<double>(&value); d && std::floor(*d) == *d && std::abs(*d) < 9e15) {
        v = static_cast<std::int64_t>(*d);
      }
    }
    check_param(*hp, v);
    out[name] = std::move(v);
  }
  return out;
}

ParamMap identity_params(int index) {
  switch (index) {
    case ops::kCrop: return resolve_params(index, {{"crop_n_times", std::int64_t{0}}});
    case ops::kInsertUnvisited:
    case ops::kInsertRandom:
    case ops::kInsertFrequent: return resolve_params(index, {{"n_insert", std::int64_t{0}}});
    case ops::kReplaceNearby: return resolve_params(index, {{"replace_ratio", 0.0}});
    case ops::kMask: return resolve_params(index, {{"mask_ratio", 0.0}});
    case ops::kSplit: return resolve_params(index, {{"max_len", std::int64_t{0}}});
    case ops::kSubsample: return resolve_params(index, {{"keep_prob", 1.0}});
    case ops::kTimePerturb: return resolve_params(index, {{"jitter_s", std::int64_t{0}}});
    case ops::kMerge: return resolve_params(index, {{"merge_gap_s", std::int64_t{0}}});
    default: throw Error(ErrorCode::kUnknownOperator, "operator index " + std::to_string(index));
  }
}

void validate_plan(const AugmentPlan& plan) {
  std::set<int> seen;
  for (int op : plan.ops) {
    operator_spec(op);
    if (!seen.insert(op).second) {
      throw Error(ErrorCode::kValidationError, "operator " + std::to_string(op) + " listed twice");
    }
  }
  for (const auto& [op, params] : plan.params) {
    if (!seen.count(op)) {
      throw Error(ErrorCode::kValidationError, "parameters given for operator " + std::to_string(op) + " not in the plan");
    }
    resolve_params(op, params);
  }
}

Dataset apply_operator(const Dataset& ds, int index, const ParamMap& params, std::uint64_t seed) {
  const ParamMap p = resolve_params(index, params);
  Rng rng(seed);
  Dataset out;
  switch (index) {
    case ops::kCrop: out = op_crop(ds, p); break;
    case ops::kInsertUnvisited:
    case ops::kInsertRandom:
    case ops::kInsertFrequent: out = op_insert(ds, index, p, rng); break;
    case ops::kReplaceNearby: out = op_replace_nearby(ds, p, rng); break;
    case ops::kMask: out = op_mask(ds, p, rng); break;
    case ops::kSplit: out = op_split(ds, p); break;
    case ops::kSubsample: out = op_subsample(ds, p, rng); break;
    case ops::kTimePerturb: out = op_time_perturb(ds, p, rng); break;
    case ops::kMerge: out = op_merge(ds, p); break;
    default: throw Error(ErrorCode::kUnknownOperator, "operator index " + std::to_string(index));
  }
  if (out.trajectories.empty() && !ds.trajectories.empty()) {
    throw Error(ErrorCode::kEmptyResult, operator_spec(index).name + " removed every trajectory");
  }
  return out;
}

Dataset apply_plan(const Dataset& ds, const AugmentPlan& plan, std::uint64_t seed) {
  validate_plan(plan);
  Dataset cur = ds;
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    const int op = plan.ops[i];
    auto it = plan.params.find(op);
    const ParamMap none;
    try {
      cur = apply_operator(cur, op, it == plan.params.end() ? none : it->second, derive_seed(seed, i));
    } catch (const Error& e) {
      throw Error(e.code(), "plan position " + std::to_string(i) + " (" + operator_spec(op).name + "): " + e.detail());
    }
  }
  return cur;
}

std::string to_text(const ParamValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return format_float_literal(*d);
  return "'" + std::get<std::string>(v) + "'";
}

json to_json(const ParamValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

json to_json(const AugmentPlan& plan) {
  json params = json::object();
  for (const auto& [op, map] : plan.params) {
    json m = json::object();
    for (const auto& [name, value] : map) m[name] = to_json(value);
    params[std::to_string(op)] = m;
  }
  return json{{"ops", plan.ops}, {"params", params}};
}

AugmentPlan plan_from_json(const json& j) {
  AugmentPlan plan;
  try {
    plan.ops = j.at("ops").get<std::vector<int>>();
    if (j.contains("params")) {
      for (const auto& [key, map] : j["params"].items()) {
        const auto op = parse_int(key);
        if (!op) throw Error(ErrorCode::kValidationError, "operator key '" + key + "' is not an integer");
        ParamMap params;
        for (const auto& [name, value] : map.items()) {
          if (value.is_number_integer()) {
            params[name] = value.get<std::int64_t>();
          } else if (value.is_number()) {
            params[name] = value.get<double>();
          } else if (value.is_string()) {
            params[name] = value.get<std::string>();
          } else {
            throw Error(ErrorCode::kValidationError, "parameter '" + name + "' has unsupported type");
          }
        }
        plan.params[static_cast<int>(*op)] = std::move(params);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidationError, std::string("augment plan json: ") + e.what());
  }
  return plan;
}

std::string to_text(const AugmentPlan& plan) {
  std::ostringstream ss;
  ss << '[';
  for (std::size_t i = 0; i < plan.ops.size(); ++i) ss << (i ? ", " : "") << plan.ops[i];
  ss << "]\n{";
  bool first_op = true;
  for (const auto& [op, params] : plan.params) {
    ss << (first_op ? "" : ", ") << op << ": {";
    first_op = false;
    bool first = true;
    for (const auto& [name, value] : params) {
      ss << (first ? "" : ", ") << "'" << name << "': " << to_text(value);
      first = false;
    }
    ss << '}';
  }
  ss << '}';
  return ss.str();
}

std::string plan_key(const AugmentPlan& plan) {
  // Resolved parameters so that explicit defaults and omissions compare equal.
  json j = json::object();
  j["ops"] = plan.ops;
  json params = json::object();
  for (int op : plan.ops) {
    auto it = plan.params.find(op);
    const ParamMap resolved = resolve_params(op, it == plan.params.end() ? ParamMap{} : it->second);
    json m = json::object();
    for (const auto& [name, value] : resolved) m[name] = to_json(value);
    params[std::to_string(op)] = m;
  }
  j["params"] = params;
  return j.dump();
}

std::string describe_operator_params() {
  std::ostringstream ss;
  for (const auto& spec : list_operators()) {
    ss << spec.index << '.' << spec.name << ":\n";
    for (const auto& hp : spec.params) {
      ss << hp.name << ":(";
      switch (hp.type) {
        case ParamType::kInt: ss << "int, range [" << format_double(hp.min) << ", " << format_double(hp.max) << "]"; break;
        case ParamType::kFloat: ss << "float, range [" << format_double(hp.min) << ", " << format_double(hp.max) << "]"; break;
        case ParamType::kChoice: ss << "str, choice in [" << join(hp.choices, ", ") << "]"; break;
      }
      ss << ") " << hp.doc << ". default is " << to_text(hp.default_value) << ".\n";
    }
  }
  return ss.str();
}

std::string describe_operator_meanings() {
  std::ostringstream ss;
  for (const auto& spec : list_operators()) ss << spec.index << '.' << spec.name << ": " << spec.description << '\n';
  return ss.str();
}

}  // namespace trajagent
