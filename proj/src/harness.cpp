#include "msee/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "msee/csv.hpp"
#include "msee/errors.hpp"

namespace msee {

std::string code_version() { return "msee 0.1.0"; }

RunContext::RunContext(const ExperimentConfig& cfg, std::filesystem::path dir)
    : cfg_(cfg), dir_(std::move(dir)) {}

std::size_t RunContext::threads() const {
  const std::size_t t = cfg_.count("monte_carlo.threads");
  if (t > 0) return t;
  return std::max(1u, std::thread::hardware_concurrency());
}

void RunContext::write(const std::string& name, const std::function<void(std::ostream&)>& body) {
  const auto file = dir_ / name;
  std::filesystem::create_directories(file.parent_path());
  std::ofstream os(file, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + file.string());
  body(os);
  if (!os) throw ConfigError("write failed for " + file.string());
  files_.push_back(name);
}

void RunContext::plot(
    const std::string& name, const std::string& title,
    const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series) {
  if (!cfg_.flag("output.svg")) return;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& [label, pts] : series)
    for (const auto& [x, y] : pts) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double W = 640, H = 400, m = 50;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  write(name, [&](std::ostream& os) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << m << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
       << "</text>\n<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << W - 2 * m
       << "\" height=\"" << H - 2 * m << "\" fill=\"none\" stroke=\"black\"/>\n";
    std::size_t c = 0;
    for (const auto& [label, pts] : series) {
      const char* col = colors[c % 5];
      os << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"";
      for (const auto& [x, y] : pts) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        os << m + (x - x0) / (x1 - x0) * (W - 2 * m) << ','
           << H - m - (y - y0) / (y1 - y0) * (H - 2 * m) << ' ';
      }
      os << "\"/>\n<text x=\"" << W - m - 120 << "\" y=\"" << m + 16 * (c + 1)
         << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << col << "\">" << label
         << "</text>\n";
      ++c;
    }
    os << "<text x=\"" << m << "\" y=\"" << H - 20 << "\" font-size=\"11\">x: [" << x0 << ", "
       << x1 << "]  y: [" << y0 << ", " << y1 << "]</text>\n</svg>\n";
  });
}

bool RunContext::check(const std::string& name, bool passed, const std::string& detail) {
  assertions_.push_back({name, passed, detail});
  return passed;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double pairwise_sum(const double* data, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return CsvWriter::number(v);
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  RunOutcome out;
  const auto start = std::chrono::steady_clock::now();
  nlohmann::json manifest;
  manifest["code_version"] = code_version();
  manifest["started"] = utc_now();
  manifest["config"] = cfg.effective();

  std::filesystem::path dir;
  std::unique_ptr<RunContext> ctx;
  try {
    const auto problems = validate_config(cfg);
    if (!problems.empty()) {
      std::string msg = "invalid configuration:";
      for (const auto& p : problems) msg += "\n  " + p;
      throw ConfigError(msg);
    }
    manifest["experiment"] = cfg.experiment();
    manifest["seed"] = cfg.seed();
    dir = cfg.output_dir();
    std::filesystem::create_directories(dir);
    ctx = std::make_unique<RunContext>(cfg, dir);
    find_experiment(cfg.experiment())->run(*ctx);
    const bool ok = std::all_of(ctx->assertions().begin(), ctx->assertions().end(),
                                [](const Assertion& a) { return a.passed; });
    out.status = ok ? RunStatus::Passed : RunStatus::AssertionFailed;
  } catch (const std::exception& e) {
    out.status = RunStatus::Error;
    out.error = e.what();
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest["wall_clock_seconds"] = wall;
  manifest["status"] = out.status == RunStatus::Passed          ? "passed"
                       : out.status == RunStatus::AssertionFailed ? "assertion_failed"
                                                                 : "error";
  if (!out.error.empty()) manifest["error"] = out.error;
  if (ctx) {
    out.assertions = ctx->assertions();
    out.files = ctx->files();
    nlohmann::json stats = nlohmann::json::object();
    for (const auto& [k, v] : ctx->stats()) stats[k] = finite_or_string(v);
    manifest["summary"] = stats;
    manifest["notes"] = ctx->notes();
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& a : ctx->assertions())
      checks.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
    manifest["assertions"] = checks;
    manifest["files"] = ctx->files();
  }

  // a config that could not be validated may not have a usable directory
  if (dir.empty()) {
    try {
      if (cfg.has("output.dir")) dir = cfg.output_dir();
    } catch (...) {
    }
  }
  if (!dir.empty()) {
    try {
      std::filesystem::create_directories(dir);
      out.manifest = dir / "manifest.json";
      std::ofstream os(out.manifest, std::ios::binary);
      os << manifest.dump(2) << '\n';
    } catch (const std::exception&) {
      out.manifest.clear();
    }
  }
  return out;
}

}  // namespace msee
