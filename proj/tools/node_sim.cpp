// node_sim: run NODE experiments, generate traces, and verify invariants.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nodetopk/experiment.hpp"
#include "nodetopk/invariants.hpp"
#include "nodetopk/workload.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const auto v = std::stoull(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad seed: " + item);
    seeds.push_back(v);
  }
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace nodetopk;

  CLI::App app{"Network-wide top-k detection simulator"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string seeds_text = "1";
  std::string trace_in;
  std::string out_path;
  std::string order = "fifo";
  auto* run = app.add_subcommand("run", "Run an experiment and write a CSV report");
  run->add_option("--switches", cfg.n_switches, "Number of switches")->default_val(10);
  run->add_option("--clusters", cfg.clusters, "Number of clusters (1 = flat)")->default_val(1);
  run->add_option("--vectors", cfg.d, "Vectors per table (d)")->default_val(2);
  run->add_option("--slots", cfg.s, "Slots per vector (s)")->default_val(4096);
  run->add_option("--k", cfg.k, "Top-k cutoff")->default_val(128);
  auto* zipf_opt = run->add_option("--zipf", cfg.zipf_a, "Zipf exponent")->default_val(1.0);
  run->add_option("--packets", cfg.num_packets, "Packets to synthesize")->default_val(1000000);
  run->add_option("--flows", cfg.num_flows, "Distinct flows to synthesize")->default_val(100000);
  run->add_option("--trace", trace_in, "Binary NTRC trace instead of a synthetic one")
      ->excludes(zipf_opt)
      ->check(CLI::ExistingFile);
  run->add_option("--affinity", cfg.affinity, "Home-switch affinity of non-top-k flows")
      ->default_val(1.0);
  run->add_option("--drop", cfg.drop_probability, "Per-message loss probability")
      ->default_val(0.0);
  run->add_option("--seeds", seeds_text, "Comma-separated seeds")->default_val("1");
  run->add_option("--cycles", cfg.cycles, "NODE cycles per run")->default_val(1);
  run->add_option("--order", order, "Delivery order: fifo or random")
      ->check(CLI::IsMember({"fifo", "random"}))
      ->default_val("fifo");
  run->add_flag("--random-interleave", cfg.random_interleave,
                "Seeded random packet interleaving across switches");
  run->add_flag("--count-drops", cfg.count_drops, "Count dropped messages too");
  run->add_option("--threads", cfg.threads, "Seeds run concurrently")->default_val(1);
  run->add_option("--out", out_path, "CSV report path (stdout if omitted)");

  double gen_a = 1.0;
  std::uint64_t gen_packets = 1000000;
  std::uint32_t gen_flows = 100000;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-trace", "Write a Zipf trace in NTRC format");
  gen->add_option("--zipf", gen_a, "Zipf exponent")->default_val(1.0);
  gen->add_option("--packets", gen_packets, "Packets")->default_val(1000000);
  gen->add_option("--flows", gen_flows, "Distinct flows")->default_val(100000);
  gen->add_option("--seed", gen_seed, "Seed")->default_val(1);
  gen->add_option("--out", gen_out, "Output path")->required();

  std::string verify_path;
  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "Run the invariant suite on a small network");
  verify->add_option("--trace", verify_path, "NTRC trace")->required()->check(CLI::ExistingFile);
  verify->add_option("--seed", verify_seed, "Seed")->default_val(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cfg.seeds = parse_seeds(seeds_text);
      if (!trace_in.empty()) cfg.trace_path = trace_in;
      cfg.delivery_order =
          order == "random" ? DeliveryOrder::kRandom : DeliveryOrder::kFifoPerPair;
      const ExperimentReport report = run_experiment(cfg);
      if (out_path.empty()) {
        write_csv(std::cout, report);
      } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) {
          std::cerr << "error: cannot open " << out_path << " for writing\n";
          return 2;
        }
        write_csv(out, report);
        if (!out) {
          std::cerr << "error: write failed for " << out_path << '\n';
          return 2;
        }
      }
      return 0;
    }
    if (*gen) {
      write_trace(gen_out, gen_zipf(gen_a, gen_packets, gen_flows, gen_seed));
      return 0;
    }
    if (*verify) {
      const Trace trace = read_trace(verify_path);
      if (auto v = verify_trace(trace, verify_seed, std::cout)) {
        std::cerr << "invariant violation: " << *v << '\n';
        return 1;
      }
      std::cout << "verify: all invariants hold\n";
      return 0;
    }
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 1;
  } catch (const TraceIoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
