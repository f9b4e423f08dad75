#include "nodetopk/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace nodetopk {

namespace {

constexpr char kMagic[4] = {'N', 'T', 'R', 'C'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 1 + 4 + 8;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

template <typename T>
T get_le(const std::uint8_t* in) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(in[i]) << (8 * i);
  }
  return v;
}

}  // namespace

Trace gen_zipf(double a, std::uint64_t num_packets, std::uint32_t num_flows,
               std::uint64_t seed) {
  if (!(a > 0.0)) throw std::invalid_argument("zipf exponent must be > 0");
  if (num_flows == 0) throw std::invalid_argument("num_flows must be >= 1");

  std::mt19937_64 rng(seed);
  std::vector<FlowId> ids(num_flows);
  std::iota(ids.begin(), ids.end(), FlowId{1});
  std::shuffle(ids.begin(), ids.end(), rng);

  std::vector<double> cdf(num_flows);
  double acc = 0.0;
  for (std::uint32_t r = 0; r < num_flows; ++r) {
    acc += std::pow(static_cast<double>(r + 1), -a);
    cdf[r] = acc;
  }

  Trace t;
  t.num_flows = num_flows;
  t.packets.reserve(num_packets);
  std::uniform_real_distribution<double> u(0.0, acc);
  for (std::uint64_t p = 0; p < num_packets; ++p) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u(rng));
    const auto rank = std::min<std::size_t>(
        static_cast<std::size_t>(it - cdf.begin()), num_flows - 1);
    t.packets.push_back(ids[rank]);
  }
  return t;
}

std::size_t home_switch(FlowId id, std::size_t n_switches) {
  std::uint64_t h = id;
  h = (h ^ (h >> 33)) * 0xff51afd7ed558ccdULL;
  h = (h ^ (h >> 33)) * 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return static_cast<std::size_t>(h % n_switches);
}

std::vector<std::vector<FlowId>> split_stream(const Trace& trace,
                                              const SplitPlan& plan) {
  if (plan.n_switches == 0) throw std::invalid_argument("no switches to split to");
  if (plan.k > trace.num_flows) {
    throw std::invalid_argument("split k exceeds the number of flows");
  }
  if (!(plan.affinity >= 0.0 && plan.affinity <= 1.0)) {
    throw std::invalid_argument("affinity must be in [0, 1]");
  }
  std::unordered_set<FlowId> heavy;
  for (const FlowEntry& e : exact_topk(trace.packets, plan.k)) heavy.insert(e.id);

  std::vector<std::vector<FlowId>> out(plan.n_switches);
  std::mt19937_64 rng(plan.seed);
  std::uniform_int_distribution<std::size_t> any(0, plan.n_switches - 1);
  std::uniform_int_distribution<std::size_t> others(
      0, plan.n_switches > 1 ? plan.n_switches - 2 : 0);
  std::bernoulli_distribution go_home(plan.affinity);
  for (FlowId id : trace.packets) {
    std::size_t dst = 0;
    if (heavy.contains(id)) {
      dst = any(rng);
    } else {
      dst = home_switch(id, plan.n_switches);
      // Off-home packets go to one of the other switches, so `affinity` is
      // exactly the home fraction.
      if (plan.n_switches > 1 && !go_home(rng)) {
        const std::size_t other = others(rng);
        dst = other < dst ? other : other + 1;
      }
    }
    out[dst].push_back(id);
  }
  return out;
}

std::vector<FlowEntry> exact_topk(std::span<const FlowId> packets,
                                  std::size_t k) {
  if (k == 0) throw std::invalid_argument("exact_topk needs k >= 1");
  std::unordered_map<FlowId, Count> counts;
  for (FlowId id : packets) ++counts[id];
  std::vector<FlowEntry> all;
  all.reserve(counts.size());
  for (const auto& [id, c] : counts) all.push_back({id, c});
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep),
                    all.end(), ranks_above);
  all.resize(keep);
  return all;
}

std::vector<std::uint8_t> encode_trace(const Trace& trace) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 4 * trace.packets.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  put_le<std::uint32_t>(out, trace.num_flows);
  put_le<std::uint64_t>(out, trace.packets.size());
  for (FlowId id : trace.packets) put_le<std::uint32_t>(out, id);
  return out;
}

Trace decode_trace(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw TraceIoError("trace header truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw TraceIoError("bad trace magic (expected NTRC)");
  }
  if (bytes[4] != kVersion) {
    throw TraceIoError("unsupported trace version " + std::to_string(bytes[4]));
  }
  Trace t;
  t.num_flows = get_le<std::uint32_t>(bytes.data() + 5);
  const auto n = get_le<std::uint64_t>(bytes.data() + 9);
  if ((bytes.size() - kHeaderSize) / 4 < n ||
      bytes.size() - kHeaderSize != n * 4) {
    throw TraceIoError("trace body holds " +
                       std::to_string((bytes.size() - kHeaderSize) / 4) +
                       " ids, header says " + std::to_string(n));
  }
  t.packets.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    t.packets[i] = get_le<std::uint32_t>(bytes.data() + kHeaderSize + 4 * i);
    if (t.packets[i] == kEmptyId) {
      throw TraceIoError("packet " + std::to_string(i) +
                         " carries reserved flow id 0");
    }
  }
  return t;
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TraceIoError("cannot open " + path.string() + " for writing");
  const auto bytes = encode_trace(trace);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw TraceIoError("write failed for " + path.string());
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceIoError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_trace(bytes);
  } catch (const TraceIoError& e) {
    throw TraceIoError(path.string() + ": " + e.what());
  }
}

}  // namespace nodetopk
