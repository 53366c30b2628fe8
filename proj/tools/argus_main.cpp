#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "argus/checkpoint.hpp"
#include "argus/trainer.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration JSON file");
  cmd->add_option("--out-dir", args.out_dir, "output directory override");
  cmd->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_flag("--deterministic", args.deterministic, "force serial, bit-reproducible runs");
}

argus::RunConfig resolve(const CommonArgs& args) {
  argus::RunConfig cfg = args.config_path.empty()
                             ? argus::RunConfig()
                             : argus::RunConfig::from_file(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed_set) {
    cfg.seed = args.seed;
    cfg.world.seed = args.seed;
  }
  if (args.deterministic) cfg.deterministic = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autoregressive recommender: generate / pretrain / finetune / evaluate"};
  app.require_subcommand(1);

  CommonArgs gen_args, pre_args, ft_args, ev_args;
  std::string init_ckpt, eval_ckpt;

  CLI::App* gen = app.add_subcommand("generate", "write a synthetic interaction log");
  add_common(gen, gen_args);
  CLI::App* pre = app.add_subcommand("pretrain", "single-epoch dual-objective pre-training");
  add_common(pre, pre_args);
  CLI::App* ft = app.add_subcommand("finetune", "one-pass two-tower fine-tuning");
  add_common(ft, ft_args);
  ft->add_option("--init", init_ckpt, "checkpoint to initialize from (default: from scratch)");
  CLI::App* ev = app.add_subcommand("evaluate", "holdout metrics for a checkpoint");
  add_common(ev, ev_args);
  ev->add_option("--ckpt", eval_ckpt, "checkpoint to evaluate")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      argus::generate_dataset(resolve(gen_args));
    } else if (pre->parsed()) {
      argus::TrainResult r = argus::pretrain(resolve(pre_args));
      std::printf("pretrain done: %lld steps (%lld skipped), loss %.4f -> %.4f, wrote %s\n",
                  static_cast<long long>(r.steps), static_cast<long long>(r.skipped_steps),
                  r.first_loss, r.last_loss, r.checkpoint_path.c_str());
    } else if (ft->parsed()) {
      argus::TrainResult r = argus::finetune(resolve(ft_args), init_ckpt);
      std::printf(
          "finetune done: %lld steps over %lld pairs, pair loss %.4f -> %.4f, wrote %s\n",
          static_cast<long long>(r.steps), static_cast<long long>(r.pairs), r.first_loss,
          r.last_loss, r.checkpoint_path.c_str());
    } else if (ev->parsed()) {
      argus::MetricsReport rep = argus::evaluate_run(resolve(ev_args), eval_ckpt);
      std::printf("%s", rep.render_table().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
