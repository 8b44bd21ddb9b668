// replisim: scenario runner and incident replay CLI.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "replisim/errors.hpp"
#include "replisim/harness.hpp"

namespace {

using namespace replisim;

void writeFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  out << content;
}

void printCounters(const ScenarioResult& res) {
  for (const auto& [name, value] : res.counters)
    std::printf("%-32s %lld\n", name.c_str(),
                static_cast<long long>(value));
}

int cmdRun(const std::string& configPath, const std::string& outDir) {
  ScenarioConfig cfg = loadScenarioFile(configPath);
  ScenarioResult res = runScenario(cfg);

  if (!outDir.empty()) {
    writeFile(outDir + "/" + res.name + "-metrics.txt", res.metricsStream);
    writeFile(outDir + "/" + res.name + "-trace.txt", res.trace);
    writeFile(outDir + "/" + res.name + "-requests.txt", res.requestTrace);
    writeFile(outDir + "/" + res.name + "-writelog.txt", res.writeLog);
  }

  std::printf("scenario %s\n", res.name.c_str());
  printCounters(res);
  std::printf("store matches replay: %s\n",
              res.storeMatchesReplay ? "yes" : "NO");
  if (res.expectFailures.empty()) {
    std::printf("expectations: %zu passed\n", cfg.expect.size());
  } else {
    for (const auto& f : res.expectFailures)
      std::printf("EXPECT FAILED: %s\n", f.c_str());
  }
  return res.ok && res.storeMatchesReplay ? 0 : 1;
}

int cmdIncident(const std::string& name, bool fixed,
                const std::string& workDir) {
  IncidentOutcome out = runIncident(name, fixed, workDir);
  std::printf("incident %s%s\n", out.name.c_str(), fixed ? " (fixed)" : "");
  for (const auto& ck : out.checks)
    std::printf("  [%s] %s%s%s\n", ck.pass ? "ok" : "FAIL", ck.label.c_str(),
                ck.detail.empty() ? "" : ": ", ck.detail.c_str());
  for (const auto& f : out.result.expectFailures)
    std::printf("  [FAIL] expect: %s\n", f.c_str());
  std::printf("%s\n", out.pass ? "PASS" : "FAIL");
  return out.pass ? 0 : 1;
}

int cmdSweep(const std::string& configPath) {
  ScenarioConfig cfg = loadScenarioFile(configPath);
  SweepResult sw = sweepCrashPoints(cfg);
  std::printf("baseline: %llu dispatches, %lld videos replicated\n",
              static_cast<unsigned long long>(sw.baselineDispatches),
              static_cast<long long>(sw.baselineReplicated));
  std::printf("crash points tried: %zu\n", sw.points.size());
  std::printf("max duplicate sink objects: %lld\n",
              static_cast<long long>(sw.maxDuplicates));
  std::printf("write log replay exact at every point: %s\n",
              sw.allReplayExact ? "yes" : "NO");
  std::printf("replication converged at every point: %s\n",
              sw.allConverged ? "yes" : "NO");
  return sw.allReplayExact && sw.allConverged ? 0 : 1;
}

int cmdCleanup(const std::string& configPath, long long atMs,
               const std::string& backupPath) {
  ScenarioConfig cfg = loadScenarioFile(configPath);
  Json args = Json::object();
  args["path"] = backupPath;
  cfg.overrides.push_back({atMs, "runCleanup", args});
  ScenarioResult res = runScenario(cfg);
  std::printf("scenario %s with cleanup at %lldms\n", res.name.c_str(), atMs);
  for (const char* name : {"cleanupDeleted", "cleanupMarked",
                           "cleanupRequeued", "cleanupAborted"}) {
    auto it = res.counters.find(name);
    std::printf("%-18s %lld\n", name,
                static_cast<long long>(it == res.counters.end() ? 0
                                                                : it->second));
  }
  std::printf("backup: %s\n", backupPath.c_str());
  return res.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic replication-pipeline simulator"};
  app.require_subcommand(1);

  std::string configPath;
  std::string outDir;
  auto* run = app.add_subcommand("run", "Run a scenario config");
  run->add_option("config", configPath, "Scenario JSON file")->required();
  run->add_option("--out", outDir, "Directory for metric/trace dumps");

  std::string incidentName;
  bool fixed = false;
  std::string workDir = ".";
  auto* inc = app.add_subcommand("incident", "Replay a recorded incident");
  inc->add_option("name", incidentName, "Incident name")->required();
  inc->add_flag("--fixed", fixed, "Replay with the remediation in place");
  inc->add_option("--workdir", workDir, "Directory for produced files");

  std::string sweepConfig;
  auto* sweep = app.add_subcommand(
      "sweep-crash-points", "Crash/restart at every event boundary");
  sweep->add_option("config", sweepConfig, "Scenario JSON file")->required();

  std::string cleanupConfig;
  long long cleanupAtMs = 0;
  std::string cleanupBackup = "queue-backup.json";
  auto* cleanup =
      app.add_subcommand("cleanup", "Run a scenario with a queue cleanup");
  cleanup->add_option("config", cleanupConfig, "Scenario JSON file")
      ->required();
  cleanup->add_option("--at", cleanupAtMs, "Virtual ms to run the cleanup at");
  cleanup->add_option("--backup", cleanupBackup, "Backup file path");

  auto* list = app.add_subcommand("list-incidents", "List incident names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmdRun(configPath, outDir);
    if (*inc) return cmdIncident(incidentName, fixed, workDir);
    if (*sweep) return cmdSweep(sweepConfig);
    if (*cleanup) return cmdCleanup(cleanupConfig, cleanupAtMs, cleanupBackup);
    if (*list) {
      for (const auto& n : replisim::incidentNames())
        std::printf("%s\n", n.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
