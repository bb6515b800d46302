// advfact command line: runs pipeline stages over a run directory.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "advfact/pipeline.hpp"
#include "advfact/report.hpp"

namespace {

using namespace advfact;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const PreconditionError*>(&e) || dynamic_cast<const ConflictError*>(&e)) return 2;
  if (dynamic_cast<const ExternalError*>(&e) || dynamic_cast<const TimeoutError*>(&e) ||
      dynamic_cast<const IoError*>(&e) || dynamic_cast<const AuthError*>(&e)) {
    return 3;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"advfact: adversarial factual perturbation toolkit"};
  app.fallthrough();

  std::string run_dir = "run";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string stages = "all";
  bool quiet = false;
  app.add_option("--run-dir", run_dir, "Run directory")->capture_default_str();
  app.add_option("--config", config_path, "Pipeline config (JSON)");
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--stages", stages, "Comma-separated stages to run (default: all)");
  app.add_flag("-q,--quiet", quiet, "Less progress output");

  std::vector<CLI::App*> stage_cmds;
  for (auto st : pipeline::all_stages()) {
    std::string name = pipeline::to_string(st);
    stage_cmds.push_back(app.add_subcommand(name, "Run the " + name + " stage"));
  }
  CLI::App* judge_cmd = app.get_subcommand("judge");
  std::string import_file;
  judge_cmd->add_option("--import", import_file, "Import human judgments from a JSONL file instead of judging");

  CLI::App* metrics_cmd = app.get_subcommand("metrics");
  bool print_metrics = false;
  metrics_cmd->add_flag("--print", print_metrics, "Print the first grouping as Markdown");

  CLI::App* serve = app.add_subcommand("serve-annotation", "Serve the annotation API");
  std::string host;
  int port = -1;
  std::string issue_id, display_name;
  int quota = 0;
  serve->add_option("--host", host, "Listen address (default from config)");
  serve->add_option("--port", port, "Listen port (default from config)");
  serve->add_option("--issue-token", issue_id, "Issue a bearer token for this annotator id and exit");
  serve->add_option("--display-name", display_name, "Display name for --issue-token");
  serve->add_option("--quota", quota, "Task quota for --issue-token (0 = unlimited)");

  CLI::App* replay = app.add_subcommand("replay", "Run the pipeline with recorded transcripts instead of live queries");
  std::string replay_from;
  replay->add_option("--from", replay_from, "Transcript file, transcripts/ directory or run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("ADVFACT_CONFIG")) config_path = env;
    }
    if (config_path.empty()) throw ConfigError("--config is required");
    auto config = pipeline::load_config(config_path, seed);
    pipeline::RunOptions opts;
    if (!quiet) opts.log = [](const std::string& m) { std::cerr << m << "\n"; };
    if (replay->parsed()) opts.replay_from = replay_from;
    pipeline::Pipeline p(run_dir, config, opts);

    if (serve->parsed()) {
      if (!issue_id.empty()) {
        std::cout << p.issue_token({issue_id, display_name.empty() ? issue_id : display_name, quota}) << "\n";
        return 0;
      }
      p.serve_annotation(host.empty() ? config.annotation_host : host, port < 0 ? config.annotation_port : port);
      return 0;
    }
    if (judge_cmd->parsed() && !import_file.empty()) {
      auto n = p.import_human_judgments(import_file);
      std::cerr << "imported " << n << " human judgments\n";
      return 0;
    }

    std::vector<pipeline::Stage> todo;
    for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
      if (stage_cmds[i]->parsed()) todo.push_back(pipeline::all_stages()[i]);
    }
    if (todo.empty()) todo = pipeline::parse_stages(stages);
    p.run(todo);

    if (print_metrics) {
      auto reports = p.reports();
      if (!reports.empty()) {
        std::cout << report::render_markdown(reports.front(), {config.run_id, config.digest});
      }
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
