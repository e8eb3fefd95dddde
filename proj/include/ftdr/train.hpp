#pragma once

#include <string>
#include <vector>

#include "ftdr/adversary.hpp"
#include "ftdr/config.hpp"
#include "ftdr/inpaint.hpp"
#include "ftdr/losses.hpp"
#include "ftdr/maskdetect.hpp"

namespace ftdr::train {

struct TrainConfig {
    std::string stage = "detector";  // detector | joint | inpainter
    int batch_size = 16;             // paper stage-1 default; stage 2 uses 8
    double lr_generator = 1e-4;
    double lr_discriminator = 1e-5;
    double lr_detector = 1e-4;
    double beta1 = 0.0;
    double beta2 = 0.9;
    int steps = 0;
    uint64_t seed = 0;
    int image_size = 256;
    std::string loss_preset = "celeba_hq";
    loss::LossWeights weights = loss::LossWeights::preset("celeba_hq");
    bool lsgan_standard = true;
    double detection_loss_weight = 1.0;  // joint stage
    int checkpoint_every = 0;            // 0 = final only
    int log_every = 1;
    uint64_t fx_seed = 400;

    detect::DetectorConfig detector;
    inpaint::GeneratorConfig generator;
    gan::DiscriminatorConfig discriminator;

    // Reads harness keys plus model hyperparameters from a flat config.
    static TrainConfig from_config(const Config& file);
};

struct Sample {
    Image corrupted;  // I_m_con
    BinaryMask mask;  // ground-truth M_bin
    Image gt;
    std::string id;
};

// Manifest: UTF-8, LF, one sample per line, three tab-separated paths
// (corrupted, mask, gt) relative to the manifest's directory.
std::vector<Sample> load_manifest(const std::string& manifest_path, int image_size);

struct TrainResult {
    std::vector<std::string> checkpoints;  // written paths, in order
    bool aborted = false;
    std::string last_good_checkpoint;
    double first_logged_loss = 0.0;
    double final_logged_loss = 0.0;
};

// Runs the configured stage: "detector" minimizes the detection loss;
// "inpainter" trains generator+discriminator on ground-truth masks;
// "joint" runs the detector in the loop (soft-mask blend) with the detection
// loss kept active. Writes <out_dir>/train_log.tsv and checkpoints.
// detector_init, when non-empty, seeds the joint stage from a stage-1
// checkpoint.
TrainResult train_two_stage(const TrainConfig& cfg, const std::vector<Sample>& data,
                            const std::string& out_dir,
                            const std::string& detector_init = "");

}  // namespace ftdr::train
