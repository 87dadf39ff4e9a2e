#include "fsqkd/mcsim.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "fsqkd/error.hpp"

namespace fsqkd::mcsim {

namespace {

// Pulses per work unit. Each unit owns an RNG stream derived from the seed
// and the unit index, so the aggregate is independent of scheduling.
constexpr std::uint64_t kBlockPulses = 1u << 16;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct ArmParams {
  double eta = 0.0;      // end-to-end efficiency of this arm
  double e_int = 0.0;    // intrinsic error once sifted
  std::uint64_t dead_slots = 0;
};

void accumulate(McTally& into, const McTally& part) {
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 2; ++i) {
      into.sent[b][i] += part.sent[b][i];
      into.sifted[b][i] += part.sifted[b][i];
      into.errors[b][i] += part.errors[b][i];
    }
  }
  for (int a = 0; a < 2; ++a) {
    into.arm_clicks[a] += part.arm_clicks[a];
    into.arm_blocked[a] += part.arm_blocked[a];
  }
}

McTally run_block(const McConfig& cfg, const ArmParams arm[2], double p_dc,
                  std::uint64_t block_index, std::uint64_t pulses) {
  McTally t;
  std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(block_index + 1)));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::poisson_distribution<int> photons[2][2];
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 2; ++i) {
      const double mu =
          detstats::cell_intensity(cfg.source, static_cast<receiver::Basis>(b), i);
      photons[b][i] = std::poisson_distribution<int>(mu);
    }
  }
  const double route_z = arm[0].eta;
  const double route_x = arm[0].eta + arm[1].eta;
  std::uint64_t dead[2] = {0, 0};

  for (std::uint64_t p = 0; p < pulses; ++p) {
    const int basis = uni(rng) < cfg.source.p_z ? 0 : 1;
    const int inten = uni(rng) < cfg.source.p_mu1 ? 0 : 1;
    ++t.sent[basis][inten];
    const int n = photons[basis][inten](rng);
    int detected[2] = {0, 0};
    for (int j = 0; j < n; ++j) {
      const double u = uni(rng);
      if (u < route_z) {
        ++detected[0];
      } else if (u < route_x) {
        ++detected[1];
      }
    }
    for (int a = 0; a < 2; ++a) {
      const bool dark = uni(rng) < p_dc;
      const bool click = detected[a] > 0 || dark;
      bool registered = false;
      if (click) {
        if (dead[a] > 0) {
          ++t.arm_blocked[a];
        } else {
          registered = true;
          ++t.arm_clicks[a];
        }
      }
      if (dead[a] > 0) --dead[a];
      if (registered) {
        dead[a] = arm[a].dead_slots;
        if (a == basis) {
          ++t.sifted[basis][inten];
          bool err;
          if (detected[a] > 0) {
            // A coincident dark count lands in the signal bin half the time;
            // otherwise the double click is squashed to a random outcome.
            if (dark && uni(rng) < 0.5) {
              err = uni(rng) < 0.5;
            } else {
              err = uni(rng) < arm[a].e_int;
            }
          } else {
            err = uni(rng) < 0.5;  // dark only: uniform bin
          }
          if (err) ++t.errors[basis][inten];
        }
      }
    }
  }
  return t;
}

}  // namespace

McTally simulate_block(const McConfig& cfg) {
  if (cfg.n_pulses == 0) throw ValidationError("pulse count must be positive");
  const double p_dc =
      receiver::dark_click_probability(cfg.receiver.detector, cfg.source.clock_hz);
  ArmParams arm[2];
  for (int a = 0; a < 2; ++a) {
    const auto basis = static_cast<receiver::Basis>(a);
    arm[a].eta = receiver::end_to_end_efficiency(cfg.receiver, basis, cfg.transmittance);
    arm[a].e_int =
        receiver::intrinsic_error_rate(cfg.receiver, basis, cfg.source.misalignment);
    arm[a].dead_slots = static_cast<std::uint64_t>(
        std::llround(cfg.receiver.detector.dead_time_s * cfg.source.clock_hz));
  }

  const std::uint64_t n_blocks = (cfg.n_pulses + kBlockPulses - 1) / kBlockPulses;
  unsigned workers = cfg.threads != 0 ? cfg.threads : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  if (workers > n_blocks) workers = static_cast<unsigned>(n_blocks);

  McTally total;
  std::mutex merge_mutex;
  std::atomic<std::uint64_t> next_block{0};
  auto worker = [&]() {
    McTally local;
    for (;;) {
      const std::uint64_t b = next_block.fetch_add(1);
      if (b >= n_blocks) break;
      const std::uint64_t begin = b * kBlockPulses;
      const std::uint64_t count = std::min(kBlockPulses, cfg.n_pulses - begin);
      accumulate(local, run_block(cfg, arm, p_dc, b, count));
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    accumulate(total, local);
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return total;
}

CellComparison compare_to_analytic(const McTally& tally, const McConfig& cfg) {
  const detstats::PulseObservables obs =
      detstats::observables(cfg.source, cfg.receiver, cfg.transmittance);
  CellComparison cmp;
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 2; ++i) {
      const double sent = static_cast<double>(tally.sent[b][i]);
      const double p_click = obs.gain[b][i] * obs.arm_dead_factor[b];
      const double var_n = sent * p_click * (1.0 - p_click);
      cmp.z_gain[b][i] =
          var_n > 0.0
              ? (static_cast<double>(tally.sifted[b][i]) - sent * p_click) / std::sqrt(var_n)
              : 0.0;
      const double clicks = static_cast<double>(tally.sifted[b][i]);
      const double q = obs.qber[b][i];
      const double var_m = clicks * q * (1.0 - q);
      cmp.z_qber[b][i] =
          var_m > 0.0
              ? (static_cast<double>(tally.errors[b][i]) - clicks * q) / std::sqrt(var_m)
              : 0.0;
      cmp.max_abs_z = std::max({cmp.max_abs_z, std::fabs(cmp.z_gain[b][i]),
                                std::fabs(cmp.z_qber[b][i])});
    }
  }
  return cmp;
}

}  // namespace fsqkd::mcsim
