#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "trajagent/augment.hpp"
#include "trajagent/error.hpp"
#include "trajagent/rng.hpp"
#include "trajagent/util.hpp"

namespace trajagent::testing {

double oracle_topk(const std::vector<Prediction>& preds, const std::vector<Id>& truths, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    bool hit = false;
    for (std::size_t r = 0; r < preds[i].candidates.size() && r < k; ++r) {
      if (preds[i].candidates[r] == truths[i]) hit = true;
    }
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double oracle_mae(const std::vector<double>& p, const std::vector<double>& t) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(static_cast<long double>(p[i]) - t[i]);
  return static_cast<double>(s / p.size());
}

double oracle_rmse(const std::vector<double>& p, const std::vector<double>& t) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double d = static_cast<long double>(p[i]) - t[i];
    s += d * d;
  }
  return static_cast<double>(std::sqrt(s / p.size()));
}

double oracle_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  long double wins = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1;
      if (scores[i] == scores[j]) wins += 0.5L;
    }
  }
  return static_cast<double>(wins / pairs);
}

double oracle_jsd(const std::vector<double>& p, const std::vector<double>& q) {
  long double sp = 0, sq = 0;
  for (double v : p) sp += v;
  for (double v : q) sq += v;
  // JSD = H(M) - (H(P) + H(Q)) / 2, entropies in bits.
  auto h = [](long double x) { return x > 0 ? -x * std::log2(x) : 0.0L; };
  long double hp = 0, hq = 0, hm = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double pi = p[i] / sp, qi = q[i] / sq;
    hp += h(pi);
    hq += h(qi);
    hm += h((pi + qi) / 2);
  }
  const long double v = hm - (hp + hq) / 2;
  return static_cast<double>(std::clamp(v, 0.0L, 1.0L));
}

double oracle_point_accuracy(const std::vector<std::vector<Id>>& preds, const std::vector<std::vector<Id>>& truths,
                             bool pooled) {
  long double ratio_sum = 0;
  std::size_t matched = 0, total = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < preds[i].size(); ++j) {
      if (preds[i][j] == truths[i][j]) ++m;
    }
    matched += m;
    total += preds[i].size();
    ratio_sum += preds[i].empty() ? 1.0L : static_cast<long double>(m) / preds[i].size();
  }
  if (pooled) return total == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(total);
  return static_cast<double>(ratio_sum / preds.size());
}

namespace {

void compare(SuiteResult& r, const std::string& what, double got, double want, double tol) {
  ++r.checks;
  const double err = std::fabs(got - want);
  r.max_error = std::max(r.max_error, err);
  if (!(err <= tol) && r.failures.size() < 20) {
    r.failures.push_back(what + ": got " + format_double(got) + ", oracle " + format_double(want));
  }
}

}  // namespace

SuiteResult run_metric_oracle_suite(std::size_t instances, std::size_t max_size, std::uint64_t seed,
                                    double tolerance) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult r;
  Rng rng(seed);
  for (std::size_t inst = 0; inst < instances; ++inst) {
    const std::size_t n = 1 + rng.index(max_size);
    const std::string tag = "#" + std::to_string(inst) + " n=" + std::to_string(n);

    // top-k over a small id space so hits and misses both occur
    const std::size_t ids = 2 + rng.index(30);
    std::vector<Prediction> preds(n);
    std::vector<Id> truths(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Id> pool(ids);
      for (std::size_t j = 0; j < ids; ++j) pool[j] = j;
      rng.shuffle(pool);
      pool.resize(rng.index(ids + 1));
      preds[i].candidates = pool;
      truths[i] = rng.index(ids);
    }
    const std::size_t k = 1 + rng.index(10);
    compare(r, "topk " + tag, topk_rate(preds, truths, k).value, oracle_topk(preds, truths, k), tolerance);

    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(-100, 100);
      b[i] = rng.uniform(-100, 100);
    }
    compare(r, "mae " + tag, mae(a, b).value, oracle_mae(a, b), tolerance);
    compare(r, "rmse " + tag, rmse(a, b).value, oracle_rmse(a, b), tolerance);

    // AUC with deliberate ties; both classes present
    const std::size_t m = std::max<std::size_t>(n, 2);
    std::vector<double> scores(m);
    std::vector<int> labels(m);
    for (std::size_t i = 0; i < m; ++i) {
      scores[i] = static_cast<double>(rng.index(8)) / 4.0;
      labels[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    compare(r, "auc " + tag, auc(scores, labels).value, oracle_auc(scores, labels), tolerance);

    std::vector<double> p(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.bernoulli(0.2) ? 0.0 : rng.uniform01();
      q[i] = rng.bernoulli(0.2) ? 0.0 : rng.uniform01();
    }
    p[0] += 0.5;
    q[n - 1] += 0.5;
    compare(r, "jsd " + tag, jsd(p, q).value, oracle_jsd(p, q), tolerance);

    std::vector<std::vector<Id>> sp(n), st(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t len = rng.index(12);
      for (std::size_t j = 0; j < len; ++j) {
        sp[i].push_back(rng.index(4));
        st[i].push_back(rng.index(4));
      }
    }
    compare(r, "acc_m " + tag, mean_point_accuracy(sp, st, AccuracyMode::kPerSequence).value,
            oracle_point_accuracy(sp, st, false), tolerance);
    compare(r, "acc_i " + tag, mean_point_accuracy(sp, st, AccuracyMode::kPooled).value,
            oracle_point_accuracy(sp, st, true), tolerance);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

Dataset random_sessionized_dataset(std::uint64_t seed) {
  Rng rng(seed);
  const bool gps = rng.bernoulli(0.3);
  Dataset ds;
  ds.name = "random-" + std::to_string(seed);
  ds.kind = gps ? TrajectoryKind::kGps : TrajectoryKind::kCheckin;
  const std::size_t n_locs = 8 + rng.index(30);
  for (std::size_t i = 0; i < n_locs; ++i) {
    Location loc;
    loc.id = (gps ? "c" : "L") + std::to_string(i);
    loc.lat = 40.0 + rng.uniform(0, 0.05);
    loc.lon = -74.0 + rng.uniform(0, 0.05);
    loc.category = gps ? "" : "cat" + std::to_string(i % 5);
    ds.vocabulary.add(loc);
  }
  const std::size_t entities = 2 + rng.index(6);
  const std::int64_t gap = default_session_gap(ds.kind);
  for (std::size_t e = 0; e < entities; ++e) {
    std::int64_t ts = 1'600'000'000 + static_cast<std::int64_t>(rng.index(86400));
    const std::size_t sessions = 1 + rng.index(5);
    for (std::size_t s = 0; s < sessions; ++s) {
      Trajectory t;
      t.entity_id = "u" + std::to_string(e);
      t.session = static_cast<int>(s);
      t.kind = ds.kind;
      const std::size_t len = 3 + rng.index(10);  // 3..12 points
      for (std::size_t j = 0; j < len; ++j) {
        const Location& loc = ds.vocabulary.at(rng.index(n_locs));
        Point p;
        p.lat = loc.lat;
        p.lon = loc.lon;
        p.loc_id = loc.id;
        p.category = loc.category;
        p.timestamp = ts;
        t.points.push_back(p);
        ts += gps ? 5 + static_cast<std::int64_t>(rng.index(30)) : 60 + static_cast<std::int64_t>(rng.index(7200));
      }
      ds.trajectories.push_back(std::move(t));
      ts += gap + 1 + static_cast<std::int64_t>(rng.index(86400));
    }
  }
  return sessionize(ds, gap, kDefaultMinSessionLength);
}

bool is_contiguous_subsequence(const std::vector<Point>& part, const std::vector<Point>& whole) {
  for (std::size_t start = 0; start < whole.size(); ++start) {
    for (std::size_t len = 1; start + len <= whole.size(); ++len) {
      if (len != part.size()) continue;
      if (std::equal(part.begin(), part.end(), whole.begin() + static_cast<std::ptrdiff_t>(start))) return true;
    }
  }
  return false;
}

namespace {

ParamMap random_params(const OperatorSpec& op, Rng& rng) {
  ParamMap p;
  for (const auto& hp : op.params) {
    if (!hp.grid.empty()) p[hp.name] = hp.grid[rng.index(hp.grid.size())];
  }
  return p;
}

void fail(SuiteResult& r, const std::string& text) {
  if (r.failures.size() < 30) r.failures.push_back(text);
}

}  // namespace

SuiteResult run_augment_property_suite(std::size_t datasets, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult r;
  for (std::size_t d = 0; d < datasets; ++d) {
    const Dataset ds = random_sessionized_dataset(derive_seed(seed, d));
    std::set<std::string> allowed;
    for (const auto& loc : ds.vocabulary.locations()) allowed.insert(loc.id);
    allowed.insert(std::string(kMaskToken));
    Rng prng(derive_seed(seed ^ 0x5eedULL, d));

    for (const auto& op : list_operators()) {
      const std::string tag = op.name + " on dataset " + std::to_string(d);
      const std::uint64_t op_seed = derive_seed(seed, d * 100 + static_cast<std::uint64_t>(op.index));
      ParamMap params = random_params(op, prng);
      Dataset out, again;
      try {
        out = apply_operator(ds, op.index, params, op_seed);
        again = apply_operator(ds, op.index, params, op_seed);
      } catch (const std::exception& e) {
        fail(r, tag + ": threw " + e.what());
        continue;
      }

      ++r.checks;
      if (!(out == again)) fail(r, tag + ": same seed gave different output");

      ++r.checks;
      for (const auto& t : out.trajectories) {
        bool monotone = true;
        for (std::size_t i = 1; i < t.points.size(); ++i) {
          if (t.points[i].timestamp < t.points[i - 1].timestamp) monotone = false;
        }
        if (!monotone) {
          fail(r, tag + ": timestamps decrease in " + t.entity_id + "/" + std::to_string(t.session));
          break;
        }
      }

      ++r.checks;
      bool closed = true;
      for (const auto& t : out.trajectories) {
        for (const auto& p : t.points) {
          if (!out.vocabulary.contains(p.loc_id) || !allowed.count(p.loc_id)) closed = false;
        }
      }
      for (const auto& loc : out.vocabulary.locations()) {
        if (!allowed.count(loc.id)) closed = false;
      }
      if (!closed) fail(r, tag + ": output references a location outside the vocabulary");

      ++r.checks;
      try {
        const Dataset id = apply_operator(ds, op.index, identity_params(op.index), op_seed);
        if (!(id == ds)) fail(r, tag + ": identity parameters changed the data");
      } catch (const std::exception& e) {
        fail(r, tag + ": identity threw " + e.what());
      }

      if (op.index == ops::kCrop) {
        ++r.checks;
        for (const auto& t : out.trajectories) {
          bool found = false;
          for (const auto& orig : ds.trajectories) {
            if (orig.entity_id == t.entity_id && orig.points.size() <= 12 &&
                is_contiguous_subsequence(t.points, orig.points)) {
              found = true;
              break;
            }
          }
          if (!found) {
            fail(r, tag + ": crop output " + t.entity_id + "/" + std::to_string(t.session) +
                        " is not a contiguous run of an original session");
            break;
          }
        }
      }
    }
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace trajagent::testing
