#include "sitstd/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "sitstd/absis.hpp"
#include "sitstd/io.hpp"
#include "sitstd/metrics.hpp"
#include "sitstd/psf.hpp"
#include "sitstd/synth.hpp"

namespace sitstd {
namespace {

constexpr const char* kExitTable =
    "Exit codes:\n"
    "  0  success\n"
    "  1  other failure\n"
    "  2  usage error (unknown flag, bad option value)\n"
    "  3  missing input or I/O failure\n"
    "  4  malformed file\n"
    "  5  incompatible grids or dimensions\n"
    "  6  objective or metric undefined, search failed\n"
    "  7  baseline unavailable for an ABSIS target\n"
    "Errors print one line on stderr: error: code=<kind> message=\"...\"";

std::string quote(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out;
}

void report_error(std::ostream& err, std::string_view kind, std::string_view message) {
  err << "error: code=" << kind << " message=\"" << quote(message) << "\"\n";
}

void log_config(std::ostream& err, std::string_view command, const KeyValueDoc& config) {
  for (const auto& [k, v] : config.entries()) err << command << ": " << k << " = " << v << "\n";
}

// ---------------------------------------------------------------------------
// Shared option groups

struct SearchFlags {
  std::string strategy = "greedy";
  double truncation = 3.0;
  double min_valid_fraction = 0.5;
  double start_sigma = 1.0;
  double sigma_floor = 0.1;
  double sigma_grid_min = 0.4;
  double sigma_grid_max = 2.0;
  double sigma_grid_step = 0.1;
  int shift_window = 2;
  int shift_cap = 8;
  std::size_t max_iterations = 100000;

  void add_to(CLI::App* app) {
    app->add_option("--strategy", strategy, "greedy (joint greedy + sub-pixel) or grid (sigma scan, then integer shift scan)")
        ->check(CLI::IsMember({"greedy", "grid"}));
    app->add_option("--truncation", truncation, "kernel truncation radius in sigmas");
    app->add_option("--min-valid-fraction", min_valid_fraction, "minimum valid kernel weight fraction per coarse pixel");
    app->add_option("--start-sigma", start_sigma, "greedy starting sigma (coarse pixels)");
    app->add_option("--sigma-floor", sigma_floor, "smallest sigma the greedy search may visit");
    app->add_option("--sigma-grid-min", sigma_grid_min, "grid strategy: smallest sigma");
    app->add_option("--sigma-grid-max", sigma_grid_max, "grid strategy: largest sigma");
    app->add_option("--sigma-grid-step", sigma_grid_step, "grid strategy: sigma step");
    app->add_option("--shift-window", shift_window, "grid strategy: initial shift half-window (coarse pixels)");
    app->add_option("--shift-cap", shift_cap, "grid strategy: largest shift half-window");
    app->add_option("--max-iterations", max_iterations, "iteration cap per greedy phase");
  }

  psf::SearchOptions options() const {
    psf::SearchOptions o;
    o.kernel.truncation_radius = truncation;
    o.kernel.min_valid_fraction = min_valid_fraction;
    o.start = {0.0, 0.0, start_sigma};
    o.sigma_floor = sigma_floor;
    o.sigma_grid_min = sigma_grid_min;
    o.sigma_grid_max = sigma_grid_max;
    o.sigma_grid_step = sigma_grid_step;
    o.shift_window = shift_window;
    o.shift_cap = shift_cap;
    o.max_iterations = max_iterations;
    o.validate();
    return o;
  }

  void echo(KeyValueDoc& c) const {
    c.set("strategy", strategy);
    c.set("truncation_radius", format_double(truncation));
    c.set("min_valid_fraction", format_double(min_valid_fraction));
    c.set("start_sigma", format_double(start_sigma));
    c.set("sigma_floor", format_double(sigma_floor));
    c.set("sigma_grid_min", format_double(sigma_grid_min));
    c.set("sigma_grid_max", format_double(sigma_grid_max));
    c.set("sigma_grid_step", format_double(sigma_grid_step));
    c.set("shift_window", std::to_string(shift_window));
    c.set("shift_cap", std::to_string(shift_cap));
    c.set("max_iterations", std::to_string(max_iterations));
  }

  psf::SearchResult fit(const MaskedImage& fine, const MaskedImage& coarse) const {
    const psf::SearchOptions o = options();
    if (strategy == "greedy") return psf::fit_pair(fine, coarse, o);
    psf::SearchResult sigma = psf::grid_search_sigma(fine, coarse, o);
    psf::SearchResult shift = psf::grid_search_shift(fine, coarse, sigma.params, o);
    shift.trace.entries.insert(shift.trace.entries.begin(), sigma.trace.entries.begin(), sigma.trace.entries.end());
    shift.trace.warnings.insert(shift.trace.warnings.begin(), sigma.trace.warnings.begin(), sigma.trace.warnings.end());
    return shift;
  }
};

std::vector<Date> parse_dates(const std::vector<std::string>& text) {
  std::vector<Date> out;
  for (const auto& t : text) out.push_back(Date::parse(t));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string join_dates(const std::vector<Date>& dates) {
  std::vector<std::string> s;
  for (Date d : dates) s.push_back(d.iso());
  return join(s, ",");
}

// Dates present in both series, optionally restricted to `requested` (every
// requested date must then be present in both).
std::vector<Date> common_dates(const ImageSeries& a, const ImageSeries& b, const std::vector<Date>& requested,
                               std::string_view what) {
  std::vector<Date> out;
  if (!requested.empty()) {
    for (Date d : requested) {
      if (!a.find(d) || !b.find(d))
        throw Error(ErrorKind::NotFound, "date " + d.iso() + " is not present in both " + std::string(what) + " inputs");
      out.push_back(d);
    }
    return out;
  }
  for (Date d : a.dates())
    if (b.find(d)) out.push_back(d);
  if (out.empty()) throw Error(ErrorKind::NotFound, "the " + std::string(what) + " inputs share no date");
  return out;
}

struct BandMatch {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  std::vector<std::string> ids;
};

// Bands of `a` (or the requested subset) and their positions in `b`.
BandMatch match_bands(const BandSet& a, const BandSet& b, const std::vector<std::string>& requested) {
  BandMatch m;
  const std::vector<std::string> ids = requested.empty() ? a.ids() : requested;
  for (const auto& id : ids) {
    const auto ia = a.index_of(id);
    const auto ib = b.index_of(id);
    if (!ia || !ib) {
      if (requested.empty()) continue;
      throw Error(ErrorKind::NotFound, "band '" + id + "' is not present in both inputs");
    }
    m.first.push_back(*ia);
    m.second.push_back(*ib);
    m.ids.push_back(id);
  }
  if (m.ids.empty()) throw Error(ErrorKind::NotFound, "the inputs share no band id");
  return m;
}

void write_text_output(const std::string& path, const KeyValueDoc& config, const std::string& csv) {
  write_file(path, io::config_comment(config) + csv);
}

// ---------------------------------------------------------------------------
// upscale-pair / upscale-general

struct UpscaleInputs {
  std::string fine_path;
  std::string coarse_path;
  std::vector<std::string> bands;
  std::vector<std::string> dates;
  std::string params_out;
  std::string upscaled_out;
  std::string trace_out;
  SearchFlags search;

  void add_to(CLI::App* app) {
    app->add_option("--fine", fine_path, "fine-resolution series")->required();
    app->add_option("--coarse", coarse_path, "coarse-resolution series")->required();
    app->add_option("--bands", bands, "band ids to fit (default: all shared)")->delimiter(',');
    app->add_option("--dates", dates, "dates to use (default: all shared)")->delimiter(',');
    app->add_option("--params-out", params_out, "fitted parameters (key = value text)")->required();
    app->add_option("--upscaled-out", upscaled_out, "upscaled fine series on the coarse grid");
    app->add_option("--trace-out", trace_out, "search trace CSV");
    search.add_to(app);
  }

  void echo(KeyValueDoc& c, std::string_view command) const {
    c.set("command", std::string(command));
    c.set("fine", fine_path);
    c.set("coarse", coarse_path);
    c.set("bands", bands.empty() ? "all" : join(bands, ","));
    c.set("dates", dates.empty() ? "all" : join(dates, ","));
    search.echo(c);
  }
};

void print_record(std::ostream& out, const io::ParamRecord& r) {
  out << r.band;
  if (r.date) out << "@" << r.date->iso();
  char buf[160];
  std::snprintf(buf, sizeof buf, " shift_x=%.4f shift_y=%.4f sigma=%.4f rho=%.6f", r.params.shift_x, r.params.shift_y,
                r.params.sigma, r.objective.value_or(std::nan("")));
  out << buf << "\n";
}

int run_upscale_pair(const UpscaleInputs& in, std::ostream& out, std::ostream& err) {
  KeyValueDoc config;
  in.echo(config, "upscale-pair");
  const psf::SearchOptions options = in.search.options();
  log_config(err, "upscale-pair", config);

  const ImageSeries fine = io::read_series(in.fine_path);
  const ImageSeries coarse = io::read_series(in.coarse_path);
  const std::vector<Date> dates = common_dates(fine, coarse, parse_dates(in.dates), "fine and coarse");
  const BandMatch bands = match_bands(fine.bands(), coarse.bands(), in.bands);

  std::vector<io::ParamRecord> records;
  std::vector<io::LabeledTrace> traces;
  ImageSeries upscaled(coarse.grid(), fine.bands().select(bands.first));
  for (Date d : dates) {
    std::vector<MaskedImage> images;
    for (std::size_t k = 0; k < bands.ids.size(); ++k) {
      const MaskedImage& f = fine.at(d).bands[bands.first[k]];
      const MaskedImage& c = coarse.at(d).bands[bands.second[k]];
      psf::SearchResult r = in.search.fit(f, c);
      for (const auto& w : r.trace.warnings) err << "upscale-pair: warning: " << bands.ids[k] << "@" << d.iso() << ": " << w << "\n";
      records.push_back({bands.ids[k], d, r.params, r.rho});
      print_record(out, records.back());
      if (!in.upscaled_out.empty()) images.push_back(psf::upscale(f, coarse.grid(), r.params, options.kernel));
      traces.push_back({bands.ids[k], d, std::move(r.trace)});
    }
    if (!in.upscaled_out.empty()) upscaled.append(d, std::move(images));
  }

  write_file(in.params_out, io::params_to_doc(records, config).str());
  if (!in.upscaled_out.empty()) io::write_series(upscaled, in.upscaled_out, io::kDefaultNodata, config);
  if (!in.trace_out.empty()) write_text_output(in.trace_out, config, io::traces_to_csv(traces));
  return kExitOk;
}

int run_upscale_general(const UpscaleInputs& in, const std::string& loo_out, std::ostream& out, std::ostream& err) {
  KeyValueDoc config;
  in.echo(config, "upscale-general");
  config.set("loo_report", loo_out.empty() ? "none" : loo_out);
  const psf::SearchOptions options = in.search.options();
  if (in.search.strategy != "greedy")
    throw Error(ErrorKind::InvalidArgument, "upscale-general supports only --strategy greedy");
  log_config(err, "upscale-general", config);

  const ImageSeries fine = io::read_series(in.fine_path);
  const ImageSeries coarse = io::read_series(in.coarse_path);
  const std::vector<Date> dates = common_dates(fine, coarse, parse_dates(in.dates), "fine and coarse");
  const BandMatch bands = match_bands(fine.bands(), coarse.bands(), in.bands);

  std::vector<io::ParamRecord> records;
  std::vector<io::LabeledTrace> traces;
  std::string loo_csv = "band,held_out_date,shift_x,shift_y,sigma,held_out_rho,error\n";
  for (std::size_t k = 0; k < bands.ids.size(); ++k) {
    std::vector<psf::ImagePair> pairs;
    for (Date d : dates) pairs.push_back({fine.at(d).bands[bands.first[k]], coarse.at(d).bands[bands.second[k]]});
    psf::SearchResult r = psf::generalized_search(pairs, options);
    for (const auto& w : r.trace.warnings) err << "upscale-general: warning: " << bands.ids[k] << ": " << w << "\n";
    for (std::size_t p : r.trace.excluded_pairs)
      err << "upscale-general: " << bands.ids[k] << ": pair " << p << " is " << dates[p].iso() << "\n";
    records.push_back({bands.ids[k], std::nullopt, r.params, r.rho});
    print_record(out, records.back());
    traces.push_back({bands.ids[k], std::nullopt, std::move(r.trace)});

    if (!loo_out.empty()) {
      const std::vector<psf::FoldResult> folds = psf::loo_evaluate_generalized(pairs, options);
      for (std::size_t i = 0; i < folds.size(); ++i) {
        const auto& f = folds[i];
        loo_csv += bands.ids[k] + "," + dates[i].iso() + "," + format_double(f.params.shift_x) + "," +
                   format_double(f.params.shift_y) + "," + format_double(f.params.sigma) + "," +
                   (f.held_out_rho ? format_double(*f.held_out_rho) : "nan") + ",\"" + quote(f.error) + "\"\n";
      }
    }
  }

  write_file(in.params_out, io::params_to_doc(records, config).str());
  if (!in.upscaled_out.empty()) {
    // Generalized parameters apply to every fine date, including those
    // without a coarse counterpart.
    ImageSeries upscaled(coarse.grid(), fine.bands().select(bands.first));
    for (const auto& e : fine.entries()) {
      std::vector<MaskedImage> images;
      for (std::size_t k = 0; k < bands.ids.size(); ++k)
        images.push_back(psf::upscale(e.bands[bands.first[k]], coarse.grid(), records[k].params, options.kernel));
      upscaled.append(e.date, std::move(images));
    }
    io::write_series(upscaled, in.upscaled_out, io::kDefaultNodata, config);
  }
  if (!in.trace_out.empty()) write_text_output(in.trace_out, config, io::traces_to_csv(traces));
  if (!loo_out.empty()) write_text_output(loo_out, config, loo_csv);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// absis

struct AbsisInputs {
  std::string coarse_path;
  std::string aggregated_path;
  std::string fine_path;
  std::size_t factor = 0;
  std::vector<std::string> targets;
  std::size_t window = 5;
  std::size_t before = 3;
  std::size_t after = 3;
  std::string resampler = "bilinear";
  std::string degenerate = "constant";
  std::string out_path;
  std::string diagnostics_dir;
};

int run_absis(const AbsisInputs& in, std::ostream& out, std::ostream& err) {
  absis::AbsisConfig cfg;
  cfg.window = in.window;
  cfg.baseline_before = in.before;
  cfg.baseline_after = in.after;
  cfg.resampler = parse_resampler(in.resampler);
  cfg.degenerate = absis::parse_degenerate_policy(in.degenerate);
  cfg.validate();
  if (in.aggregated_path.empty() == in.fine_path.empty())
    throw Error(ErrorKind::InvalidArgument, "give exactly one of --aggregated or --fine");
  if (!in.fine_path.empty() && in.factor == 0)
    throw Error(ErrorKind::InvalidArgument, "--fine needs --factor");
  const std::vector<Date> targets = parse_dates(in.targets);

  KeyValueDoc config;
  config.set("command", "absis");
  config.set("coarse", in.coarse_path);
  if (!in.aggregated_path.empty()) {
    config.set("aggregated", in.aggregated_path);
  } else {
    config.set("fine", in.fine_path);
    config.set("factor", std::to_string(in.factor));
  }
  config.set("targets", join_dates(targets));
  config.set("window", std::to_string(cfg.window));
  config.set("baseline_before", std::to_string(cfg.baseline_before));
  config.set("baseline_after", std::to_string(cfg.baseline_after));
  config.set("resampler", std::string(to_string(cfg.resampler)));
  config.set("degenerate", std::string(absis::to_string(cfg.degenerate)));
  log_config(err, "absis", config);

  const ImageSeries coarse = io::read_series(in.coarse_path);
  ImageSeries aggregated = in.aggregated_path.empty() ? aggregate_mean(io::read_series(in.fine_path), in.factor)
                                                      : io::read_series(in.aggregated_path);
  // Process bands in the coarse series' order.
  const BandMatch bands = match_bands(coarse.bands(), aggregated.bands(), coarse.bands().ids());
  if (bands.ids.size() != coarse.bands().size())
    throw Error(ErrorKind::DimensionMismatch, "coarse and aggregated-fine band ids differ");
  aggregated = aggregated.select_bands(bands.second);

  ImageSeries result(aggregated.grid(), coarse.bands());
  for (Date t : targets) {
    const absis::StandardizedImage s = absis::absis_standardize(coarse, aggregated, t, cfg);
    out << t.iso() << " baseline=" << join_dates(s.baseline);
    for (std::size_t b = 0; b < s.bands.size(); ++b)
      out << " " << coarse.bands()[b].id << ".valid=" << s.bands[b].valid_count() << "/" << s.bands[b].size();
    out << "\n";
    result.append(t, s.bands);

    if (!in.diagnostics_dir.empty()) {
      std::filesystem::create_directories(in.diagnostics_dir);
      std::vector<Band> diag_bands;
      std::vector<MaskedImage> diag_images;
      for (std::size_t b = 0; b < s.bands.size(); ++b) {
        const std::string& id = coarse.bands()[b].id;
        const absis::BandDiagnostics& d = s.diagnostics[b];
        MaskedImage selection(aggregated.grid(), 0.0, false);
        for (std::size_t i = 0; i < selection.size(); ++i)
          if (d.selection.valid(i)) selection.set(i, static_cast<double>(d.selection.date_index[i]));
        for (auto [suffix, img] : {std::pair<const char*, const MaskedImage*>{"selection", &selection},
                                   {"best_rho", &d.selection.best_rho},
                                   {"alpha0", &d.field.intercept},
                                   {"alpha1", &d.field.slope}}) {
          diag_bands.push_back({id + "." + suffix, std::nullopt});
          diag_images.push_back(*img);
        }
      }
      ImageSeries diag(aggregated.grid(), BandSet(std::move(diag_bands)));
      diag.append(t, std::move(diag_images));
      KeyValueDoc diag_config = config;
      diag_config.set("baseline", join_dates(s.baseline));
      diag_config.set("selection_encoding", "index into baseline");
      const auto path = std::filesystem::path(in.diagnostics_dir) / ("absis_diag_" + t.iso() + ".sitsr");
      io::write_series(diag, path.string(), io::kDefaultNodata, diag_config);
    }
  }
  io::write_series(result, in.out_path, io::kDefaultNodata, config);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateInputs {
  std::string ref_path;
  std::vector<std::string> preds;
  std::string metric = "all";
  std::vector<std::string> dates;
  std::string out_path;
};

int run_evaluate(const EvaluateInputs& in, std::ostream& out, std::ostream& err) {
  std::vector<metrics::Metric> wanted;
  if (in.metric == "all")
    wanted = {metrics::Metric::Rho, metrics::Metric::Rmse, metrics::Metric::Edge};
  else
    wanted = {metrics::parse_metric(in.metric)};
  std::vector<std::pair<std::string, std::string>> preds;
  for (const auto& p : in.preds) {
    const std::size_t eq = p.find('=');
    if (eq != std::string::npos)
      preds.emplace_back(p.substr(0, eq), p.substr(eq + 1));
    else
      preds.emplace_back(std::filesystem::path(p).stem().string(), p);
    if (preds.back().first.empty() || preds.back().second.empty())
      throw Error(ErrorKind::InvalidArgument, "bad --pred value '" + p + "', expected PATH or NAME=PATH");
  }

  KeyValueDoc config;
  config.set("command", "evaluate");
  config.set("ref", in.ref_path);
  for (std::size_t i = 0; i < preds.size(); ++i) config.set("pred." + preds[i].first, preds[i].second);
  config.set("metric", in.metric);
  config.set("dates", in.dates.empty() ? "all" : join(in.dates, ","));
  config.set("edge_percentile", format_double(metrics::kEdgePercentile));
  log_config(err, "evaluate", config);

  const ImageSeries ref = io::read_series(in.ref_path);
  const std::vector<Date> requested = parse_dates(in.dates);
  std::vector<metrics::MetricReport> reports;
  for (metrics::Metric m : wanted) {
    for (const auto& [name, path] : preds) {
      const ImageSeries pred = io::read_series(path);
      const BandMatch bands = match_bands(pred.bands(), ref.bands(), {});
      for (Date d : common_dates(pred, ref, requested, "prediction and reference")) {
        metrics::MetricReport r;
        r.metric = m;
        r.method = name;
        r.date = d.iso();
        r.inputs = {path, in.ref_path};
        for (std::size_t k = 0; k < bands.ids.size(); ++k)
          r.per_band.emplace_back(bands.ids[k], metrics::evaluate(m, pred.at(d).bands[bands.first[k]],
                                                                  ref.at(d).bands[bands.second[k]]));
        reports.push_back(std::move(r));
      }
    }
  }
  out << metrics::to_table(reports);
  if (!in.out_path.empty()) write_text_output(in.out_path, config, metrics::to_csv(reports));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthInputs {
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::string fine_out;
  std::string coarse_out;
  std::string aggregated_out;
  std::string spec_out;
};

int run_synth(const SynthInputs& in, std::ostream& out, std::ostream& err) {
  synth::SceneSpec spec = synth::parse_scene_spec(read_file(in.spec_path));
  if (in.seed) spec.seed = *in.seed;
  spec.validate();
  if (in.fine_out.empty() && in.coarse_out.empty() && in.aggregated_out.empty() && in.spec_out.empty())
    throw Error(ErrorKind::InvalidArgument, "synth needs at least one output");

  KeyValueDoc config;
  config.set("command", "synth");
  config.set("spec", in.spec_path);
  const KeyValueDoc scene = KeyValueDoc::parse(synth::to_text(spec));
  for (const auto& [k, v] : scene.entries()) config.set("scene." + k, v);
  log_config(err, "synth", config);

  const ImageSeries fine = synth::generate_fine_series(spec);
  if (!in.fine_out.empty()) io::write_series(fine, in.fine_out, io::kDefaultNodata, config);
  if (!in.coarse_out.empty()) io::write_series(synth::degrade_to_coarse(fine, spec), in.coarse_out, io::kDefaultNodata, config);
  if (!in.aggregated_out.empty())
    io::write_series(aggregate_mean(fine, spec.factor), in.aggregated_out, io::kDefaultNodata, config);
  if (!in.spec_out.empty()) write_file(in.spec_out, synth::to_text(spec));
  out << "synth: " << spec.n_dates << " dates, " << spec.band_ids.size() << " band(s), fine "
      << describe(spec.fine_grid()) << ", coarse " << describe(spec.coarse_grid()) << "\n";
  return kExitOk;
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return kExitUsage;
    case ErrorKind::Io:
    case ErrorKind::NotFound: return kExitIo;
    case ErrorKind::Format: return kExitFormat;
    case ErrorKind::GridMismatch:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::Extent: return kExitGrid;
    case ErrorKind::UndefinedObjective:
    case ErrorKind::UndefinedMetric:
    case ErrorKind::SearchFailed:
    case ErrorKind::EmptyKernel: return kExitUndefined;
    case ErrorKind::BaselineUnavailable: return kExitBaseline;
    case ErrorKind::EmptyInput: return kExitOther;
  }
  return kExitOther;
}

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sensor-mismatch standardization for spatio-temporal image fusion", "sitstd"};
  app.require_subcommand(1, 1);
  app.footer(kExitTable);
  app.option_defaults()->always_capture_default();

  UpscaleInputs pair_in;
  CLI::App* pair_cmd = app.add_subcommand("upscale-pair", "fit PSF width and shifts per fine/coarse date pair");
  pair_in.add_to(pair_cmd);

  UpscaleInputs general_in;
  std::string loo_out;
  CLI::App* general_cmd = app.add_subcommand("upscale-general", "fit one PSF/shift set per band across all pairs");
  general_in.add_to(general_cmd);
  general_cmd->add_option("--loo-out", loo_out, "leave-one-out report CSV (needs >= 3 pairs)");

  AbsisInputs absis_in;
  CLI::App* absis_cmd = app.add_subcommand("absis", "standardize coarse images to the aggregated-fine domain");
  absis_cmd->add_option("--coarse", absis_in.coarse_path, "coarse series (must contain the targets)")->required();
  absis_cmd->add_option("--aggregated", absis_in.aggregated_path, "aggregated-fine series on the coarse-pixel grid");
  absis_cmd->add_option("--fine", absis_in.fine_path, "fine series, block-averaged by --factor");
  absis_cmd->add_option("--factor", absis_in.factor, "aggregation factor for --fine");
  absis_cmd->add_option("--target", absis_in.targets, "target date(s), YYYY-MM-DD")->required()->delimiter(',');
  absis_cmd->add_option("--window", absis_in.window, "local regression window (odd, >= 3)");
  absis_cmd->add_option("--before", absis_in.before, "baseline dates before the target");
  absis_cmd->add_option("--after", absis_in.after, "baseline dates after the target");
  absis_cmd->add_option("--resampler", absis_in.resampler, "coarse anomaly resampler")
      ->check(CLI::IsMember({"bilinear", "nearest"}));
  absis_cmd->add_option("--degenerate", absis_in.degenerate, "zero-variance window policy")
      ->check(CLI::IsMember({"constant", "invalidate"}));
  absis_cmd->add_option("--out", absis_in.out_path, "standardized series")->required();
  absis_cmd->add_option("--diagnostics-dir", absis_in.diagnostics_dir, "write selection, best-rho and regression maps");

  EvaluateInputs eval_in;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "compare predictions with a reference series");
  eval_cmd->add_option("--ref", eval_in.ref_path, "reference series")->required();
  eval_cmd->add_option("--pred", eval_in.preds, "prediction series, PATH or NAME=PATH (repeatable)")->required();
  eval_cmd->add_option("--metric", eval_in.metric, "rho, rmse, edge or all")
      ->check(CLI::IsMember({"rho", "rmse", "edge", "all"}));
  eval_cmd->add_option("--dates", eval_in.dates, "dates to compare (default: all shared)")->delimiter(',');
  eval_cmd->add_option("--out", eval_in.out_path, "metric CSV");

  SynthInputs synth_in;
  std::uint64_t seed = 0;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic fine/coarse scene");
  synth_cmd->add_option("--spec", synth_in.spec_path, "scene spec (key = value text)")->required();
  CLI::Option* seed_opt = synth_cmd->add_option("--seed", seed, "override the spec seed");
  synth_cmd->add_option("--fine-out", synth_in.fine_out, "fine series");
  synth_cmd->add_option("--coarse-out", synth_in.coarse_out, "coarse series");
  synth_cmd->add_option("--aggregated-out", synth_in.aggregated_out, "aggregated-fine series");
  synth_cmd->add_option("--spec-out", synth_in.spec_out, "resolved scene spec");

  std::vector<std::string> owned{"sitstd"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : owned) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (pair_cmd->parsed()) return run_upscale_pair(pair_in, out, err);
    if (general_cmd->parsed()) return run_upscale_general(general_in, loo_out, out, err);
    if (absis_cmd->parsed()) return run_absis(absis_in, out, err);
    if (eval_cmd->parsed()) return run_evaluate(eval_in, out, err);
    if (synth_cmd->parsed()) {
      if (seed_opt->count() > 0) synth_in.seed = seed;
      return run_synth(synth_in, out, err);
    }
  } catch (const Error& e) {
    report_error(err, to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    report_error(err, "io", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return kExitOther;
  }
  return kExitUsage;
}

int cli_run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_run(args, std::cout, std::cerr);
}

}  // namespace sitstd
