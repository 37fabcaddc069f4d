#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "sitstd/error.hpp"
#include "sitstd/psf.hpp"

namespace sitstd::psf {

std::string_view to_string(Phase p) { return p == Phase::PixelLevel ? "pixel" : "subpixel"; }

bool SearchTrace::accepted_strictly_increasing() const {
  std::optional<double> last;
  for (const auto& e : entries) {
    if (!e.accepted) continue;
    if (!e.rho) return false;
    if (last && !(*e.rho > *last)) return false;
    last = e.rho;
  }
  return true;
}

std::size_t SearchTrace::accepted_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.accepted ? 1 : 0;
  return n;
}

void SearchTrace::append(const SearchTrace& other) {
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
  std::set<std::size_t> merged(excluded_pairs.begin(), excluded_pairs.end());
  merged.insert(other.excluded_pairs.begin(), other.excluded_pairs.end());
  excluded_pairs.assign(merged.begin(), merged.end());
}

std::string trace_to_csv(const SearchTrace& trace) {
  std::ostringstream os;
  os << "iteration,phase,x,y,sigma,rho,accepted\n";
  char buf[256];
  for (const auto& e : trace.entries) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,", e.iteration, std::string(to_string(e.phase)).c_str(),
                  e.params.shift_x, e.params.shift_y, e.params.sigma);
    os << buf;
    if (e.rho) {
      std::snprintf(buf, sizeof buf, "%.17g", *e.rho);
      os << buf;
    } else {
      os << "nan";
    }
    os << "," << (e.accepted ? 1 : 0) << "\n";
  }
  return os.str();
}

void SearchOptions::validate() const {
  kernel.validate();
  start.validate();
  if (!(shift_step > 0.0) || !(sigma_step > 0.0) || !(subpixel_step > 0.0))
    throw Error(ErrorKind::InvalidArgument, "search steps must be positive");
  if (!(sigma_floor > 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma floor must be positive");
  if (!(sigma_grid_min > 0.0) || sigma_grid_max < sigma_grid_min || !(sigma_grid_step > 0.0))
    throw Error(ErrorKind::InvalidArgument, "invalid sigma grid bounds");
  if (shift_window < 0 || shift_cap < shift_window)
    throw Error(ErrorKind::InvalidArgument, "shift window must satisfy 0 <= window <= cap");
}

namespace {

// Parameters are kept as integer offsets from a base point so repeated moves
// never accumulate rounding drift.
using Offset = std::array<long, 3>;

double snap(double v) { return std::round(v * 1e9) / 1e9; }

struct Lattice {
  UpscaleParams base;
  std::array<double, 3> step;

  UpscaleParams at(const Offset& n) const {
    return {snap(base.shift_x + static_cast<double>(n[0]) * step[0]),
            snap(base.shift_y + static_cast<double>(n[1]) * step[1]),
            snap(base.sigma + static_cast<double>(n[2]) * step[2])};
  }
};

class CachedObjective {
 public:
  CachedObjective(const Objective& f, const Lattice& lattice) : f_(f), lattice_(lattice) {}

  std::optional<double> operator()(const Offset& n) {
    auto it = cache_.find(n);
    if (it != cache_.end()) return it->second;
    auto rho = f_(lattice_.at(n));
    cache_.emplace(n, rho);
    return rho;
  }

 private:
  const Objective& f_;
  const Lattice& lattice_;
  std::map<Offset, std::optional<double>> cache_;
};

SearchResult greedy_walk(const Objective& objective, const Lattice& lattice, std::span<const Offset> moves, Phase phase,
                         std::optional<double> start_rho, bool record_start, const SearchOptions& options) {
  CachedObjective eval(objective, lattice);
  Offset current{0, 0, 0};
  std::optional<double> rho = start_rho ? start_rho : eval(current);
  if (!rho)
    throw Error(ErrorKind::SearchFailed, "objective undefined at the search start " + describe(lattice.at(current)));

  SearchResult result;
  if (record_start) result.trace.entries.push_back({0, phase, lattice.at(current), rho, true});

  for (std::size_t iteration = 1; iteration <= options.max_iterations; ++iteration) {
    std::optional<std::size_t> best_entry;
    Offset best_offset = current;
    double best_rho = *rho;
    for (const auto& m : moves) {
      const Offset cand{current[0] + m[0], current[1] + m[1], current[2] + m[2]};
      const UpscaleParams p = lattice.at(cand);
      if (p.sigma < options.sigma_floor - 1e-12) continue;
      const auto cand_rho = eval(cand);
      result.trace.entries.push_back({static_cast<int>(iteration), phase, p, cand_rho, false});
      if (cand_rho && *cand_rho > best_rho) {
        best_rho = *cand_rho;
        best_offset = cand;
        best_entry = result.trace.entries.size() - 1;
      }
    }
    if (!best_entry) break;
    result.trace.entries[*best_entry].accepted = true;
    current = best_offset;
    rho = best_rho;
    if (iteration == options.max_iterations)
      result.trace.warnings.push_back("iteration limit reached before convergence");
  }
  result.params = lattice.at(current);
  result.rho = *rho;
  return result;
}

constexpr std::array<Offset, 6> kPixelMoves{{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
constexpr std::array<Offset, 4> kSubpixelMoves{{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}}};

Objective pair_objective(const MaskedImage& fine, const MaskedImage& coarse, const KernelOptions& kernel) {
  return [&fine, &coarse, kernel](const UpscaleParams& p) { return try_objective(fine, coarse, p, kernel); };
}

}  // namespace

SearchResult greedy_pixel_level(const Objective& objective, const SearchOptions& options) {
  options.validate();
  const Lattice lattice{options.start, {options.shift_step, options.shift_step, options.sigma_step}};
  return greedy_walk(objective, lattice, kPixelMoves, Phase::PixelLevel, std::nullopt, true, options);
}

SearchResult greedy_subpixel(const Objective& objective, const UpscaleParams& start, std::optional<double> start_rho,
                             const SearchOptions& options) {
  options.validate();
  start.validate();
  const Lattice lattice{start, {options.subpixel_step, options.subpixel_step, 0.0}};
  return greedy_walk(objective, lattice, kSubpixelMoves, Phase::SubPixel, start_rho, !start_rho.has_value(), options);
}

SearchResult grid_search_sigma(const MaskedImage& fine, const MaskedImage& coarse, const SearchOptions& options) {
  options.validate();
  const Objective f = pair_objective(fine, coarse, options.kernel);
  SearchResult result;
  std::optional<double> best;
  const auto n = static_cast<long>(std::floor((options.sigma_grid_max - options.sigma_grid_min) / options.sigma_grid_step + 1e-9));
  for (long i = 0; i <= n; ++i) {
    const UpscaleParams p{0.0, 0.0, snap(options.sigma_grid_min + static_cast<double>(i) * options.sigma_grid_step)};
    const auto rho = f(p);
    const bool improves = rho && (!best || *rho > *best);
    result.trace.entries.push_back({static_cast<int>(i), Phase::PixelLevel, p, rho, improves});
    if (improves) {
      best = rho;
      result.params = p;
    }
  }
  if (!best) throw Error(ErrorKind::SearchFailed, "sigma grid search: objective undefined at every candidate");
  result.rho = *best;
  return result;
}

SearchResult grid_search_shift(const MaskedImage& fine, const MaskedImage& coarse, const UpscaleParams& params,
                               const SearchOptions& options) {
  options.validate();
  params.validate();
  const Objective f = pair_objective(fine, coarse, options.kernel);
  const Lattice lattice{params, {options.shift_step, options.shift_step, 0.0}};

  SearchResult result;
  std::map<std::pair<long, long>, std::optional<double>> seen;
  std::optional<double> best;
  std::pair<long, long> best_at{0, 0};
  int evaluation = 0;
  long window = options.shift_window;
  for (;;) {
    for (long dy = -window; dy <= window; ++dy) {
      for (long dx = -window; dx <= window; ++dx) {
        if (seen.count({dx, dy})) continue;
        const UpscaleParams p = lattice.at({dx, dy, 0});
        const auto rho = f(p);
        seen[{dx, dy}] = rho;
        const bool improves = rho && (!best || *rho > *best);
        result.trace.entries.push_back({evaluation++, Phase::PixelLevel, p, rho, improves});
        if (improves) {
          best = rho;
          best_at = {dx, dy};
        }
      }
    }
    if (!best) throw Error(ErrorKind::SearchFailed, "shift grid search: objective undefined at every candidate");
    const bool on_border = std::labs(best_at.first) == window || std::labs(best_at.second) == window;
    if (!on_border || window == 0) break;
    if (window >= options.shift_cap) {
      result.trace.warnings.push_back("shift search reached the cap of +-" + std::to_string(options.shift_cap) +
                                      " pixels with the best shift on the window border");
      break;
    }
    ++window;
  }
  result.params = lattice.at({best_at.first, best_at.second, 0});
  result.rho = *best;
  return result;
}

SearchResult greedy_joint_search(const MaskedImage& fine, const MaskedImage& coarse, const SearchOptions& options) {
  return greedy_pixel_level(pair_objective(fine, coarse, options.kernel), options);
}

SearchResult subpixel_refine(const MaskedImage& fine, const MaskedImage& coarse, const UpscaleParams& params,
                             const SearchOptions& options) {
  return greedy_subpixel(pair_objective(fine, coarse, options.kernel), params, std::nullopt, options);
}

namespace {

SearchResult two_stage(const Objective& f, const SearchOptions& options) {
  SearchResult pixel = greedy_pixel_level(f, options);
  SearchResult sub = greedy_subpixel(f, pixel.params, pixel.rho, options);
  SearchResult out;
  out.params = sub.params;
  out.rho = sub.rho;
  out.trace = std::move(pixel.trace);
  out.trace.append(sub.trace);
  return out;
}

}  // namespace

SearchResult fit_pair(const MaskedImage& fine, const MaskedImage& coarse, const SearchOptions& options) {
  return two_stage(pair_objective(fine, coarse, options.kernel), options);
}

SearchResult generalized_search(std::span<const ImagePair> pairs, const SearchOptions& options) {
  if (pairs.empty()) throw Error(ErrorKind::InvalidArgument, "generalized search needs at least one image pair");
  std::set<std::size_t> excluded;
  const Objective mean_objective = [&](const UpscaleParams& p) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto rho = try_objective(pairs[i].fine.get(), pairs[i].coarse.get(), p, options.kernel);
      if (!rho) {
        excluded.insert(i);
        continue;
      }
      sum += *rho;
      ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  SearchResult result;
  try {
    result = two_stage(mean_objective, options);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SearchFailed)
      throw Error(ErrorKind::SearchFailed, "generalized search: objective undefined for every pair at the start");
    throw;
  }
  result.trace.excluded_pairs.assign(excluded.begin(), excluded.end());
  for (auto i : excluded)
    result.trace.warnings.push_back("pair " + std::to_string(i) + " excluded from the mean at one or more candidates");
  return result;
}

std::vector<FoldResult> loo_evaluate_generalized(std::span<const ImagePair> pairs, const SearchOptions& options) {
  if (pairs.size() < 3)
    throw Error(ErrorKind::InvalidArgument,
                "leave-one-out evaluation needs at least 3 pairs, got " + std::to_string(pairs.size()));
  std::vector<FoldResult> folds;
  for (std::size_t held = 0; held < pairs.size(); ++held) {
    std::vector<ImagePair> training;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (i != held) training.push_back(pairs[i]);
    FoldResult fold;
    try {
      fold.params = generalized_search(training, options).params;
      fold.held_out_rho = try_objective(pairs[held].fine.get(), pairs[held].coarse.get(), fold.params, options.kernel);
      if (!fold.held_out_rho) fold.error = "objective undefined for the held-out pair";
    } catch (const Error& e) {
      fold.error = e.what();
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

}  // namespace sitstd::psf
