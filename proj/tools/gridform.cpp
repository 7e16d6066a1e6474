#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridform/bench.hpp"

namespace fs = std::filesystem;
using namespace gridform;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void apply_reward_json(const nlohmann::json& j, RewardConfig& rc) {
  rc.r_topo = j.value("r_topo", rc.r_topo);
  rc.p_vol = j.value("p_vol", rc.p_vol);
  rc.b_base = j.value("b_base", rc.b_base);
  rc.s_upp = j.value("s_upp", rc.s_upp);
  rc.n_step = j.value("n_step", rc.n_step);
  rc.gamma = j.value("gamma", rc.gamma);
  rc.p_nc = j.value("p_nc", rc.p_nc);
}

void load_train_config(const std::string& path, TrainConfig& tc, RewardConfig& rc) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  tc.episodes = j.value("episodes", tc.episodes);
  tc.gamma = j.value("gamma", tc.gamma);
  tc.learning_rate = j.value("learning_rate", tc.learning_rate);
  tc.seed = j.value("seed", tc.seed);
  tc.maxlen = j.value("maxlen", tc.maxlen);
  if (j.contains("batch_sizes")) {
    tc.batch_size1 = j["batch_sizes"].at(0);
    tc.batch_size2 = j["batch_sizes"].at(1);
    tc.batch_size3 = j["batch_sizes"].at(2);
  }
  tc.replay_min = j.value("replay_min", tc.replay_min);
  tc.epsilon0 = j.value("epsilon0", tc.epsilon0);
  tc.epsilon_k = j.value("epsilon_k", tc.epsilon_k);
  tc.epsilon_min = j.value("epsilon_min", tc.epsilon_min);
  tc.r_std = j.value("r_std", tc.r_std);
  tc.kernel = j.value("kernel", tc.kernel);
  tc.sustain_window = j.value("sustain_window", tc.sustain_window);
  tc.stop_on_sustained = j.value("stop_on_sustained", tc.stop_on_sustained);
  rc.gamma = tc.gamma;
  if (j.contains("reward")) apply_reward_json(j["reward"], rc);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridform: dynamic multi-microgrid formation toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string case_path, config_path, checkpoint_path, out_dir = "out", csv_path;
  int scenarios = 100;
  std::uint64_t seed = 1, scenario_seed_arg = 1, gc_seed = 1;
  std::string guard = "on";

  auto* cmd_train = app.add_subcommand("train", "train the CM-DDQN policy");
  cmd_train->add_option("--case", case_path, "case JSON file")->required()->check(CLI::ExistingFile);
  cmd_train->add_option("--config", config_path, "training config JSON")->check(CLI::ExistingFile);
  cmd_train->add_option("--out", out_dir, "output directory");

  auto* cmd_eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
  cmd_eval->add_option("--case", case_path, "case JSON file")->required()->check(CLI::ExistingFile);
  cmd_eval->add_option("--checkpoint", checkpoint_path, "qnet checkpoint")->required()->check(CLI::ExistingFile);
  cmd_eval->add_option("--scenarios", scenarios, "number of evaluation scenarios");
  cmd_eval->add_option("--seed", seed, "scenario seed");
  cmd_eval->add_option("--guard", guard, "online do-nothing guard: on|off");
  cmd_eval->add_option("--out", out_dir, "output directory");

  auto* cmd_enum = app.add_subcommand("enumerate", "enumerate feasible topologies");
  cmd_enum->add_option("--case", case_path, "case JSON file")->required()->check(CLI::ExistingFile);
  cmd_enum->add_option("--csv", csv_path, "write the feasible list as CSV");

  auto* cmd_compare = app.add_subcommand("compare", "dynamic policy vs optimal static plan");
  cmd_compare->add_option("--case", case_path, "case JSON file")->required()->check(CLI::ExistingFile);
  cmd_compare->add_option("--checkpoint", checkpoint_path, "qnet checkpoint")->required()->check(CLI::ExistingFile);
  cmd_compare->add_option("--scenario-seed", scenario_seed_arg, "scenario seed");
  cmd_compare->add_option("--out", out_dir, "output directory");

  auto* cmd_gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  cmd_gradcheck->add_option("--seed", gc_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*cmd_train) {
      NetworkCase c = load_case_file(case_path);
      TrainConfig tc;
      RewardConfig rc;
      if (!config_path.empty()) load_train_config(config_path, tc, rc);
      TrainResult res = train(c, tc, rc);
      write_file(fs::path(out_dir) / "training_log.csv", training_log_csv(res.log));
      write_file(fs::path(out_dir) / "checkpoint.json", save_checkpoint(res.params));
      std::cout << "episodes: " << res.log.size() << "\n"
                << "sustained: " << (res.sustained ? "yes" : "no");
      if (res.sustained) std::cout << " (from episode " << res.sustained_at << ")";
      std::cout << "\nwrote " << (fs::path(out_dir) / "checkpoint.json").string() << "\n";
    } else if (*cmd_eval) {
      NetworkCase c = load_case_file(case_path);
      QNetworkParams params = load_checkpoint_file(checkpoint_path);
      RewardConfig rc;
      EvalMetrics m = evaluate(params, c, rc, scenarios, seed, guard == "on");
      write_file(fs::path(out_dir) / "metrics.json", metrics_json(m));
      write_file(fs::path(out_dir) / "timing.json", timing_json(m));
      std::cout << metrics_json(m) << "\n"
                << "mean_decision_ms: " << m.mean_decision_ms << "\n";
    } else if (*cmd_enum) {
      NetworkCase c = load_case_file(case_path);
      TransformedGraph tg = transform(c);
      EnumerationResult res = enumerate_feasible(tg);
      std::cout << "switches: " << tg.switch_count() << "\n"
                << "required_closed: " << required_closed_count(tg) << "\n"
                << "tested: " << res.tested << "\n"
                << "feasible: " << res.feasible.size() << "\n";
      if (!csv_path.empty()) write_file(csv_path, feasible_csv(tg, res.feasible));
    } else if (*cmd_compare) {
      NetworkCase c = load_case_file(case_path);
      QNetworkParams params = load_checkpoint_file(checkpoint_path);
      RewardConfig rc;
      Scenario sc = generate_scenario(c, scenario_seed_arg);
      ComparisonReport rep = compare(params, c, sc, rc);
      write_file(fs::path(out_dir) / "comparison.csv", comparison_csv(rep));
      write_file(fs::path(out_dir) / "voltage_profiles.json", voltage_profiles_json(c, rep));
      std::cout << "shed_energy_dynamic: " << rep.shed_energy_dynamic << "\n"
                << "shed_energy_static: " << rep.shed_energy_static << "\n"
                << "topologies_used: " << rep.topologies.size() << "\n";
    } else if (*cmd_gradcheck) {
      QNetShape shape;
      shape.width = 8;
      shape.outputs = 8;
      double worst = 0.0;
      for (int s = 0; s < 10; ++s) {
        GradCheckResult r = gradient_check(shape, gc_seed + s, 64);
        worst = std::max(worst, r.max_rel_err);
      }
      std::cout << "max_rel_err: " << worst << "\n";
      if (worst >= 1e-4) {
        std::cerr << "gradcheck FAILED (threshold 1e-4)\n";
        return 1;
      }
      std::cout << "gradcheck passed\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
