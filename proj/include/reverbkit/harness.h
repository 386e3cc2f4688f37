// reverbkit/harness.h

// Copyright 2026  The reverbkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef REVERBKIT_HARNESS_H_
#define REVERBKIT_HARNESS_H_

// Experiment harness: desk-scale corpus synthesis, the simulated distant
// channel, the adaptation-strategy grid, and report emission.  Every stage
// is deterministic in (config, seed).

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "reverbkit/augment.h"
#include "reverbkit/fhvae.h"
#include "reverbkit/manifest.h"
#include "reverbkit/synth.h"
#include "reverbkit/tdnn.h"

namespace reverbkit {
namespace harness {

// The distant-microphone stand-in: reverberation from a sampled room set,
// a constant gain offset, and additive noise.  Any piece can be disabled.
struct ChannelSpec {
  bool reverb = true;
  std::string rir_set = "S2";
  int n_rooms = 20;
  int n_rirs_per_room = 2;
  // Tail length: long enough to smear across frame boundaries, short enough
  // that a frame-context model can still see most of the echo span.
  double rir_duration_s = 0.2;
  std::optional<double> snr_db = 15.0;
  double gain_db = -6.0;
};

// Simulates and saves the channel's RIR pool; returns the saved paths.
std::vector<std::string> build_rir_pool(const std::string &set_id, int n_rooms,
                                        int n_rirs_per_room,
                                        double duration_s, uint64_t seed,
                                        const std::string &out_dir);

// Applies the channel to every utterance; labels are inherited from the
// clean stream (convolution output is delay-compensated and length-matched).
Manifest make_distant(const Manifest &clean,
                      const std::vector<std::string> &rir_pool,
                      const ChannelSpec &spec, const std::string &out_dir,
                      uint64_t seed);

struct GridConfig {
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::string out_dir;

  synth::CorpusParams corpus;
  ChannelSpec channel;

  // Reverberation-augmentation pool (deliberately a different room set than
  // the channel: simulated RIRs never match the "real" channel).
  std::string augment_rir_set = "S1";
  int augment_rooms = 20;
  int augment_rirs_per_room = 2;
  double augment_rir_duration_s = 0.2;

  // Acoustic model / enhancer shape and schedule.  Feature regression needs
  // more width than classification at this scale, so enhancers get their own
  // hidden size.
  int hidden_units = 64;
  int enhancer_hidden_units = 128;
  std::vector<std::array<int, 3>> contexts = {
      {-1, 0, 1}, {-1, 0, 1}, {-1, 0, 1}, {-3, 0, 3}, {-3, 0, 3}, {-3, 0, 3}};
  double step_size = 0.025;        // single-domain training
  double multi_step_size = 0.01;   // multi-domain and enhancer training
  int epochs = 20;
  int finetune_epochs = 5;
  double finetune_decay = 0.75;
  double clip_norm = 5.0;

  fhvae::FhvaeConfig fhvae;  // desk defaults set by default_grid_config()

  // Arm groups to run; unknown names are usage errors.
  std::vector<std::string> arms = {"baseline",  "multi",   "reverb-aug",
                                   "enhance",   "dereverb", "fhvae"};

  // Run independent arms of one seed concurrently.  Shared inputs (corpus,
  // features, the clean-trained recognizer) are materialized up front; each
  // arm then works on its own copy, so results match the sequential order.
  bool parallel_arms = false;
};

// Desk-scale defaults (small hidden width, 16-dim latents, short FHVAE
// schedule) so the full grid stays tractable on one machine.
GridConfig default_grid_config();

GridConfig read_grid_config(const std::string &path);
void write_grid_config(const GridConfig &config, const std::string &path);

// One (train domain, target domain) cell of the report.
struct MetricCell {
  std::string train_domain, target_domain;
  std::vector<double> fers;  // per seed, in config.seeds order
  int seed_count = 0;
  double fer_mean = 0.0, fer_min = 0.0, fer_max = 0.0;
  bool failed = false;
  std::string error;

  void finalize();  // fills aggregates from `fers`
  double range() const { return fer_max - fer_min; }
};

struct MetricsReport {
  std::vector<uint64_t> seeds;
  std::vector<MetricCell> cells;

  MetricCell *find(const std::string &train, const std::string &target);
  const MetricCell *find(const std::string &train,
                         const std::string &target) const;
};

// Runs the configured arm groups for every seed.  A failing arm is recorded
// in its cells and the grid continues.
MetricsReport run_grid(const GridConfig &config);

// CSV columns: train,target,fer_mean,fer_min,fer_max,seeds.  Failed cells
// carry seeds=0 and empty value fields.
void write_report_csv(const MetricsReport &report, const std::string &path);
MetricsReport read_report_csv(const std::string &path);

// Full per-seed values; read back for the acceptance analysis.
void write_report_json(const MetricsReport &report, const std::string &path);
MetricsReport read_report_json(const std::string &path);

void write_report_svg(const MetricsReport &report, const std::string &path);
void write_report_text(const MetricsReport &report, const std::string &path);

// Emits report.{csv,json,svg,txt} under dir.
void write_reports(const MetricsReport &report, const std::string &dir);

}  // namespace harness
}  // namespace reverbkit

#endif  // REVERBKIT_HARNESS_H_
