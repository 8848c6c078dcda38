#include "token_painter/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "token_painter/config.hpp"
#include "token_painter/errors.hpp"
#include "token_painter/io.hpp"
#include "token_painter/pipeline.hpp"
#include "token_painter/selftest.hpp"

namespace tp::cli {

namespace fs = std::filesystem;

namespace {

// Raised for flag combinations CLI11 cannot express.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct InputFlags {
  std::string image;
  std::string mask;
  std::string prompt;
  std::string prompt_tokens;
  std::string config;
  std::string out;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  bool record_timing = false;
};

void add_input_flags(CLI::App* cmd, InputFlags& f, bool with_mode) {
  cmd->add_option("--image", f.image, "Input image (binary PPM or PGM)")->required();
  cmd->add_option("--mask", f.mask, "Inpainting mask (PGM thresholded at 128, or 0/1 CSV)")->required();
  auto* p = cmd->add_option("--prompt", f.prompt, "Prompt text");
  auto* pt = cmd->add_option("--prompt-tokens", f.prompt_tokens, "Prompt token tensor (L x D)");
  p->excludes(pt);
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--out", f.out, "Output directory")->required();
  if (with_mode) cmd->add_option("--mode", f.mode, "tb | t-only | deif | token-painter");
  cmd->add_option("--seed", f.seed, "Run seed");
  cmd->add_option("--steps", f.steps, "Generation steps K");
}

RunConfig resolve_config(const InputFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(io::read_text(f.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(f.config + ": " + e.what());
    }
    cfg = merge_config(cfg, j);
  }
  if (!f.mode.empty()) cfg.mode = parse_mode(f.mode);
  if (f.seed) cfg.seed = *f.seed;
  if (f.steps) cfg.steps = *f.steps;
  validate(cfg);
  return cfg;
}

Matrix load_text(const InputFlags& f, const RunConfig& cfg) {
  if (!f.prompt_tokens.empty()) {
    const auto t = io::read_tensor(f.prompt_tokens);
    if (t.shape != std::vector<std::size_t>{static_cast<std::size_t>(cfg.text_tokens),
                                            static_cast<std::size_t>(cfg.dim)}) {
      throw FormatError(f.prompt_tokens + ": prompt tokens must have shape [" +
                        std::to_string(cfg.text_tokens) + ", " + std::to_string(cfg.dim) + "]");
    }
    return io::to_matrix(t);
  }
  return prompt_tokens(f.prompt, cfg.text_tokens, cfg.dim, cfg.seed);
}

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::string psnr_text(const RunReport& r) {
  if (!r.background_psnr) return "";
  return std::isinf(*r.background_psnr) ? "inf" : num(*r.background_psnr);
}

std::string trace_csv(const RunReport& report, bool timing) {
  std::ostringstream ss;
  ss << "k,set_size,N1,N2,alpha,beta,imag_residual" << (timing ? ",millis" : "") << '\n';
  for (const auto& s : report.steps) {
    ss << s.step << ',' << s.set_size << ',' << s.unknown << ',' << s.predicted << ','
       << num(s.alpha) << ',' << (s.beta ? num(*s.beta) : "") << ',' << num(s.imag_residual);
    if (timing) ss << ',' << num(s.millis);
    ss << '\n';
  }
  return ss.str();
}

int thread_budget() {
  int n = 0;
  if (const char* env = std::getenv("TOKEN_PAINTER_THREADS")) {
    try {
      n = std::stoi(env);
    } catch (const std::exception&) {
      n = 0;
    }
  }
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

struct Scene {
  Image image;
  PixelMask mask;
  Matrix text;
};

Scene load_scene(const InputFlags& f, const RunConfig& cfg) {
  return {io::read_image(f.image), io::read_mask(f.mask), load_text(f, cfg)};
}

nlohmann::ordered_json input_json(const InputFlags& f) {
  nlohmann::ordered_json j;
  j["image"] = f.image;
  j["mask"] = f.mask;
  if (!f.prompt_tokens.empty()) {
    j["prompt_tokens"] = f.prompt_tokens;
  } else {
    j["prompt"] = f.prompt;
  }
  return j;
}

int cmd_inpaint(const InputFlags& f, std::ostream& out) {
  const RunConfig cfg = resolve_config(f);
  const Scene scene = load_scene(f, cfg);
  const auto result = inpaint(scene.image, scene.mask, scene.text, cfg);

  const fs::path dir(f.out);
  fs::create_directories(dir);
  io::write_image(dir / "result.ppm", result.image);
  io::write_tensor(dir / "tokens.tensor", io::to_tensor(result.tokens));
  io::write_text(dir / "trace.csv", trace_csv(result.report, f.record_timing));
  io::write_heatmap(dir / "guidance_map.pgm", result.maps.rows, result.maps.cols, result.maps.guidance);
  io::write_heatmap(dir / "inpaint_map.pgm", result.maps.rows, result.maps.cols, result.maps.inpaint);

  nlohmann::ordered_json report;
  report["config"] = to_json(cfg);
  report["inputs"] = input_json(f);
  report["report"] = to_json(result.report, f.record_timing);
  report["outputs"] = {"result.ppm",   "tokens.tensor",    "report.json",
                       "trace.csv",    "guidance_map.pgm", "inpaint_map.pgm"};
  io::write_text(dir / "report.json", report.dump(2) + "\n");

  out << "mode " << to_string(cfg.mode) << ": N=" << result.report.inpaint_count << " of "
      << result.tokens.size() << " tokens, K=" << result.report.steps.size()
      << ", background PSNR " << (psnr_text(result.report).empty() ? "n/a" : psnr_text(result.report))
      << ", wrote " << dir.string() << "\n";
  return kOk;
}

struct AblationCell {
  Mode mode;
  FusionKind fusion;
  Exponents exponents;
};

std::vector<AblationCell> parse_grid(const std::string& path, const RunConfig& base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("grid: top level must be an object");
  std::vector<Mode> modes;
  std::vector<FusionKind> kinds{base.fusion};
  std::vector<Exponents> lambdas{base.exponents};
  try {
    if (!j.contains("modes")) throw UsageError("grid: 'modes' is required");
    for (const auto& m : j.at("modes")) modes.push_back(parse_mode(m.get<std::string>()));
    if (j.contains("fusion_kinds")) {
      kinds.clear();
      for (const auto& k : j.at("fusion_kinds")) kinds.push_back(parse_fusion_kind(k.get<std::string>()));
    }
    if (j.contains("lambdas")) {
      lambdas.clear();
      for (const auto& l : j.at("lambdas")) {
        const auto v = l.get<std::vector<double>>();
        if (v.size() != 3) throw UsageError("grid: each lambdas entry needs 3 values");
        lambdas.push_back({v[0], v[1], v[2]});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("grid: ") + e.what());
  }
  if (modes.empty() || kinds.empty() || lambdas.empty()) throw UsageError("grid is empty");
  std::vector<AblationCell> cells;
  for (const auto m : modes)
    for (const auto k : kinds)
      for (const auto& l : lambdas) cells.push_back({m, k, l});
  return cells;
}

int cmd_ablate(const InputFlags& f, const std::string& grid_path, std::ostream& out) {
  const RunConfig base = resolve_config(f);
  const auto cells = parse_grid(grid_path, base);
  const Scene scene = load_scene(f, base);

  struct Row {
    RunReport report;
    double millis = 0.0;
    std::exception_ptr error;
  };
  std::vector<Row> rows(cells.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      RunConfig cfg = base;
      cfg.mode = cells[i].mode;
      cfg.fusion = cells[i].fusion;
      cfg.exponents = cells[i].exponents;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        rows[i].report = inpaint(scene.image, scene.mask, scene.text, cfg).report;
      } catch (...) {
        rows[i].error = std::current_exception();
      }
      rows[i].millis =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const int threads = std::min<int>(thread_budget(), static_cast<int>(cells.size()));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& r : rows) {
    if (r.error) std::rethrow_exception(r.error);
  }

  std::ostringstream csv;
  csv << "mode,fusion,lambda1,lambda2,lambda3,background_psnr,mass_on_guidance,mass_on_inpaint,"
         "imag_residual,wall_ms\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const auto& r = rows[i].report;
    csv << to_string(c.mode) << ',' << to_string(c.fusion) << ',' << num(c.exponents.lambda1) << ','
        << num(c.exponents.lambda2) << ',' << num(c.exponents.lambda3) << ',' << psnr_text(r) << ','
        << num(r.mass_on_guidance) << ',' << num(r.mass_on_inpaint) << ',' << num(r.imag_residual_max)
        << ',' << num(rows[i].millis) << '\n';
  }
  fs::create_directories(f.out);
  io::write_text(fs::path(f.out) / "ablate.csv", csv.str());
  out << "ablate: " << cells.size() << " configurations, wrote "
      << (fs::path(f.out) / "ablate.csv").string() << "\n";
  return kOk;
}

int cmd_analyze(const InputFlags& f, const std::vector<std::string>& mode_names, bool dump_records,
                std::ostream& out) {
  const RunConfig base = resolve_config(f);
  const Scene scene = load_scene(f, base);
  const fs::path dir(f.out);
  fs::create_directories(dir);

  std::ostringstream summary;
  summary << "mode,mass_on_guidance,mass_on_inpaint\n";
  for (const auto& name : mode_names) {
    RunConfig cfg = base;
    cfg.mode = parse_mode(name);
    const auto result = inpaint(scene.image, scene.mask, scene.text, cfg);
    const std::string tag(to_string(cfg.mode));
    const auto& m = result.maps;
    io::write_heatmap(dir / (tag + "_guidance_map.pgm"), m.rows, m.cols, m.guidance);
    io::write_heatmap(dir / (tag + "_inpaint_map.pgm"), m.rows, m.cols, m.inpaint);
    io::write_grid_csv(dir / (tag + "_guidance_map.csv"), m.rows, m.cols, m.guidance);
    io::write_grid_csv(dir / (tag + "_inpaint_map.csv"), m.rows, m.cols, m.inpaint);
    if (dump_records && !result.records.empty()) {
      const std::size_t s = result.records.front().weights.rows();
      io::Tensor t{{result.records.size(), s, s}, io::DType::f32le, {}};
      t.values.reserve(result.records.size() * s * s);
      for (const auto& rec : result.records) {
        t.values.insert(t.values.end(), rec.weights.data().begin(), rec.weights.data().end());
      }
      io::write_tensor(dir / (tag + "_attention.tensor"), t);
    }
    summary << tag << ',' << num(result.report.mass_on_guidance) << ','
            << num(result.report.mass_on_inpaint) << '\n';
    out << tag << ": mass on guidance " << result.report.mass_on_guidance << ", on inpainting region "
        << result.report.mass_on_inpaint << "\n";
  }
  io::write_text(dir / "attention_mass.csv", summary.str());

  std::ostringstream weights;
  weights << "l,m_gaussian,linear,constant,quadratic\n";
  const int L = base.text_tokens;
  const auto mg = fusion_weights(L, FusionKind::m_gaussian, base.effective_phi(), base.tau);
  const auto lin = fusion_weights(L, FusionKind::linear, base.effective_phi(), base.tau);
  const auto con = fusion_weights(L, FusionKind::constant, base.effective_phi(), base.tau);
  const auto quad = fusion_weights(L, FusionKind::quadratic, base.effective_phi(), base.tau);
  for (int l = 0; l < L; ++l) {
    weights << l << ',' << num(mg.w[l]) << ',' << num(lin.w[l]) << ',' << num(con.w[l]) << ','
            << num(quad.w[l]) << '\n';
  }
  io::write_text(dir / "fusion_weights.csv", weights.str());
  return kOk;
}

int cmd_selftest(bool inject_fault, std::ostream& out) {
  SelftestOptions opt;
  if (inject_fault) opt.fft_perturbation = 1e-6;
  const auto results = run_selftest(opt);
  bool all = true;
  for (const auto& r : results) {
    out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    all &= r.passed;
  }
  out << results.size() << " suites, " << (all ? "all passed" : "FAILURES") << "\n";
  return all ? kOk : kSelftestFailed;
}

int cmd_demo(const std::string& dir, int size, std::uint64_t seed, std::ostream& out) {
  if (size <= 0 || size % 8 != 0) throw UsageError("--size must be a positive multiple of 8");
  fs::create_directories(dir);
  io::write_image(fs::path(dir) / "image.ppm", demo_image(size, size, 3, seed));
  const int a = size / 4, b = 3 * size / 4;
  io::write_mask_pgm(fs::path(dir) / "mask.pgm", demo_mask(size, size, a, a, b, b));
  out << "wrote " << (fs::path(dir) / "image.ppm").string() << " and "
      << (fs::path(dir) / "mask.pgm").string() << "\n";
  return kOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Training-free masked-autoregressive inpainting with dual-stream guidance fusion"};
  app.name(args.empty() ? "token_painter" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);

  InputFlags inpaint_flags;
  auto* inpaint_cmd = app.add_subcommand("inpaint", "Inpaint the masked region of an image");
  add_input_flags(inpaint_cmd, inpaint_flags, true);
  inpaint_cmd->add_flag("--record-timing", inpaint_flags.record_timing,
                        "Include wall-clock timings in report.json and trace.csv");

  InputFlags ablate_flags;
  std::string grid_path;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run a grid of modes, fusion kinds and lambdas");
  add_input_flags(ablate_cmd, ablate_flags, false);
  ablate_cmd->add_option("--grid", grid_path, "Grid JSON")->required();

  InputFlags analyze_flags;
  std::vector<std::string> analyze_modes{"tb_baseline", "t_only", "token_painter"};
  bool dump_records = false;
  auto* analyze_cmd = app.add_subcommand("analyze", "Export attention maps and masses per mode");
  add_input_flags(analyze_cmd, analyze_flags, false);
  analyze_cmd->add_option("--modes", analyze_modes, "Modes to compare");
  analyze_cmd->add_flag("--dump-records", dump_records, "Write post-softmax attention tensors");

  bool inject_fault = false;
  auto* selftest_cmd = app.add_subcommand("selftest", "Run the built-in oracle suites");
  selftest_cmd->add_flag("--inject-fft-fault", inject_fault,
                         "Perturb the fast transform to check that the harness fails");

  std::string demo_dir;
  int demo_size = 64;
  std::uint64_t demo_seed = 0;
  auto* demo_cmd = app.add_subcommand("demo", "Write a synthetic image and mask");
  demo_cmd->add_option("--out", demo_dir, "Output directory")->required();
  demo_cmd->add_option("--size", demo_size, "Image side in pixels");
  demo_cmd->add_option("--seed", demo_seed, "Scene seed");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("token_painter");

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? &app : app.get_subcommands().front())->help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kBadFlags;
  }

  const auto require_prompt = [](const InputFlags& f) {
    if (f.prompt.empty() && f.prompt_tokens.empty()) {
      throw UsageError("one of --prompt or --prompt-tokens is required");
    }
  };

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == inpaint_cmd) {
      require_prompt(inpaint_flags);
      return cmd_inpaint(inpaint_flags, out);
    }
    if (active == ablate_cmd) {
      require_prompt(ablate_flags);
      return cmd_ablate(ablate_flags, grid_path, out);
    }
    if (active == analyze_cmd) {
      require_prompt(analyze_flags);
      return cmd_analyze(analyze_flags, analyze_modes, dump_records, out);
    }
    if (active == selftest_cmd) return cmd_selftest(inject_fault, out);
    return cmd_demo(demo_dir, demo_size, demo_seed, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return kBadFlags;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kBadFlags;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kFileError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kFileError;
  } catch (const Error& e) {
    err << "contract violation: " << e.what() << "\n";
    return kContractViolation;
  }
}

}  // namespace tp::cli
