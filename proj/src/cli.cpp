#include "iotstage/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "iotstage/calibration.hpp"
#include "iotstage/coordinator.hpp"
#include "iotstage/scenario.hpp"

namespace iotstage {

namespace {

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto logger = std::make_shared<spdlog::logger>("iotstage", sink);
  logger->set_pattern("[%l] %v");
  const char* env = std::getenv("IOTSTAGE_LOG");
  const std::string level = env != nullptr ? env : "error";
  if (level == "debug") logger->set_level(spdlog::level::debug);
  else if (level == "info") logger->set_level(spdlog::level::info);
  else logger->set_level(spdlog::level::err);
  return logger;
}

void print_violations(const std::vector<Violation>& violations, std::ostream& os) {
  for (const auto& v : violations) {
    os << v.code << " " << v.path;
    if (!v.message.empty()) os << ": " << v.message;
    os << "\n";
  }
}

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> rtf;
  std::size_t repeat = 1;
  std::string trace;
  std::string report;
};

struct CalibrateArgs {
  std::string target;
  std::size_t probes = 20;
  std::int64_t spacing_ms = 20;
  std::int64_t timeout_ms = 1000;
  std::string merge_into;
  std::string channel = "wireless";
};

int cmd_validate(const std::string& path, std::ostream& out, spdlog::logger& log) {
  Scenario s;
  try {
    s = load_scenario(path);
  } catch (const Error& e) {
    out << e.what() << "\n";
    return e.code() == ErrorCode::kIo ? kExitRuntime : kExitInvalid;
  }
  const auto violations = validate(s);
  if (violations.empty()) {
    out << "valid: " << s.name << "\n";
    return kExitOk;
  }
  print_violations(violations, out);
  log.info("{} violation(s) in {}", violations.size(), path);
  return kExitInvalid;
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err, spdlog::logger& log,
            const std::atomic<bool>* abort_flag) {
  Scenario s;
  try {
    s = load_scenario(args.scenario);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.code() == ErrorCode::kIo ? kExitRuntime : kExitInvalid;
  }

  std::map<std::string, std::string> overrides;
  if (args.seed) {
    s.seed = *args.seed;
    overrides["seed"] = std::to_string(*args.seed);
  }
  if (args.mode) {
    const auto mode = parse_run_mode(*args.mode);
    if (!mode) {
      err << "unknown mode: " << *args.mode << "\n";
      return kExitUsage;
    }
    s.mode = *mode;
    overrides["mode"] = *args.mode;
  }
  if (args.rtf) {
    s.rtf = *args.rtf;
    overrides["rtf"] = fmt::format("{}", *args.rtf);
  }
  if (args.repeat != 1) overrides["repeat"] = std::to_string(args.repeat);
  if (!args.trace.empty()) overrides["trace"] = args.trace;
  if (!args.report.empty()) overrides["report"] = args.report;

  if (const auto violations = validate(s); !violations.empty()) {
    print_violations(violations, err);
    return kExitInvalid;
  }

  RepeatOptions options;
  options.trace_path = args.trace;
  options.abort_flag = abort_flag;
  log.info("running {} x{} (seed {}, mode {})", s.name, args.repeat, s.seed, run_mode_name(s.mode));

  MultiRunReport report;
  try {
    report = run_repeated(s, args.repeat, options);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.code() == ErrorCode::kValidation ? kExitInvalid : kExitRuntime;
  }
  report.overrides = overrides;

  if (!args.report.empty()) {
    try {
      emit_report(report, args.report);
    } catch (const Error& e) {
      err << e.what() << "\n";
      return kExitRuntime;
    }
  }
  for (const auto& [tag, aggregate] : report.tags) {
    if (report.n_runs == 1 && aggregate.pooled) {
      const Summary& p = *aggregate.pooled;
      out << fmt::format("{}: {} (samples={})\n", tag, format_summary(p.mean_ms, p.std_ms), p.count);
    } else {
      out << report.summary_line(tag) << "\n";
    }
  }
  if (report.n_runs == 1) out << "trace_hash: " << report.trace_hashes.front() << "\n";
  for (const auto& r : report.runs) {
    for (const auto& [reason, count] : r.drops) log.debug("run {} {}: {}", r.run_index, reason, count);
  }
  if (report.partial) {
    err << report.error << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err,
                  spdlog::logger& log) {
  std::optional<ChannelSelector> selector;
  Scenario s;
  if (!args.merge_into.empty()) {
    selector = ChannelSelector::parse(args.channel);
    if (!selector) {
      err << "invalid channel selector: " << args.channel << "\n";
      return kExitUsage;
    }
    try {
      s = load_scenario(args.merge_into);
    } catch (const Error& e) {
      err << e.what() << "\n";
      return e.code() == ErrorCode::kIo ? kExitRuntime : kExitInvalid;
    }
  }

  ProbeOptions options;
  options.target = args.target;
  options.count = args.probes;
  options.spacing = args.spacing_ms * kMillisecond;
  options.timeout = args.timeout_ms * kMillisecond;
  try {
    const ProbeResult result = probe(options);
    log.info("{} replies, {} lost, {} duplicates", result.rtts.size(), result.lost, result.duplicates);
    const ChannelEstimate e = estimate(result);
    out << estimate_to_json(e) << "\n";
    if (selector) {
      const Scenario merged = merge_calibration(s, e, *selector);
      std::ofstream file(args.merge_into, std::ios::binary | std::ios::trunc);
      file << serialize_scenario(merged) << "\n";
      if (!file) throw Error(ErrorCode::kIo, "cannot write " + args.merge_into);
      log.info("merged estimate into {} ({})", args.merge_into, selector->to_string());
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* abort_flag) {
  auto log = make_logger(err);

  CLI::App app{"Staging environment for distributed IoT systems", "iotstage"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
  validate_cmd->add_option("scenario", validate_path, "Scenario JSON")->required();

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Execute a scenario");
  run_cmd->add_option("scenario", run_args.scenario, "Scenario JSON")->required();
  run_cmd->add_option("--seed", run_args.seed, "Override the base seed");
  run_cmd->add_option("--mode", run_args.mode, "fast, realtime or scaled");
  run_cmd->add_option("--rtf", run_args.rtf, "Real-time factor for scaled mode");
  run_cmd->add_option("--repeat", run_args.repeat, "Number of runs")->check(CLI::PositiveNumber);
  run_cmd->add_option("--trace", run_args.trace, "Trace JSONL path");
  run_cmd->add_option("--report", run_args.report, "Report JSON path");

  CalibrateArgs cal_args;
  auto* cal_cmd = app.add_subcommand("calibrate", "Estimate channel parameters from a UDP echo");
  cal_cmd->add_option("--target", cal_args.target, "host:port of the echo endpoint")->required();
  cal_cmd->add_option("--probes", cal_args.probes, "Number of probes")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--spacing-ms", cal_args.spacing_ms, "Probe spacing")->check(CLI::NonNegativeNumber);
  cal_cmd->add_option("--timeout-ms", cal_args.timeout_ms, "Reply timeout")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--merge-into", cal_args.merge_into, "Scenario file to update");
  cal_cmd->add_option("--channel", cal_args.channel, "wireless or link:a,b");

  auto* version_cmd = app.add_subcommand("version", "Print the version");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  if (validate_cmd->parsed()) return cmd_validate(validate_path, out, *log);
  if (run_cmd->parsed()) return cmd_run(run_args, out, err, *log, abort_flag);
  if (cal_cmd->parsed()) return cmd_calibrate(cal_args, out, err, *log);
  if (version_cmd->parsed()) {
    out << "iotstage " << kVersion << "\n";
    return kExitOk;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace iotstage
