#include "ftdr/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "ftdr/checkpoint.hpp"
#include "ftdr/datagen.hpp"
#include "ftdr/image_io.hpp"

namespace fs = std::filesystem;

namespace ftdr::train {

TrainConfig TrainConfig::from_config(const Config& file) {
    TrainConfig cfg;
    cfg.stage = file.get("stage", cfg.stage);
    cfg.image_size = file.get_int("image_size", cfg.image_size);
    cfg.batch_size = file.get_int("batch_size", cfg.stage == "detector" ? 16 : 8);
    cfg.lr_generator = file.get_double("lr_generator", cfg.lr_generator);
    cfg.lr_discriminator = file.get_double("lr_discriminator", cfg.lr_discriminator);
    cfg.lr_detector = file.get_double("lr_detector", cfg.lr_detector);
    cfg.beta1 = file.get_double("beta1", cfg.beta1);
    cfg.beta2 = file.get_double("beta2", cfg.beta2);
    cfg.steps = file.get_int("steps", cfg.steps);
    cfg.seed = static_cast<uint64_t>(file.get_int("seed", 0));
    cfg.loss_preset = file.get("preset", cfg.loss_preset);
    cfg.weights = loss::LossWeights::preset(cfg.loss_preset);
    cfg.weights.recons = file.get_double("lambda_recons", cfg.weights.recons);
    cfg.weights.adv = file.get_double("lambda_adv", cfg.weights.adv);
    cfg.weights.perc = file.get_double("lambda_perc", cfg.weights.perc);
    cfg.weights.style = file.get_double("lambda_style", cfg.weights.style);
    cfg.weights.tv = file.get_double("lambda_tv", cfg.weights.tv);
    cfg.lsgan_standard = file.get_bool("lsgan_standard", cfg.lsgan_standard);
    cfg.detection_loss_weight = file.get_double("detection_loss_weight", 1.0);
    cfg.checkpoint_every = file.get_int("checkpoint_every", 0);
    cfg.log_every = file.get_int("log_every", 1);
    cfg.fx_seed = static_cast<uint64_t>(file.get_int("fx_seed", 400));

    cfg.detector.image_size = cfg.image_size;
    cfg.detector.layers = file.get_int("det_layers", cfg.detector.layers);
    cfg.detector.heads = file.get_int("det_heads", cfg.detector.heads);
    cfg.detector.stem_channels = file.get_int("det_stem_channels", cfg.detector.stem_channels);
    cfg.detector.mlp_hidden = file.get_int("det_mlp_hidden", cfg.detector.mlp_hidden);
    cfg.detector.freq_channels = file.get_int("det_freq_channels", cfg.detector.freq_channels);
    cfg.detector.alpha = file.get_double("alpha", cfg.detector.alpha);

    cfg.generator.channels0 = file.get_int("gen_channels0", cfg.generator.channels0);
    cfg.generator.channels1 = file.get_int("gen_channels1", cfg.generator.channels1);
    cfg.generator.channels2 = file.get_int("gen_channels2", cfg.generator.channels2);
    cfg.generator.landmark_channels =
        file.get_int("landmark_channels", cfg.generator.landmark_channels);

    cfg.discriminator.base_channels = file.get_int("disc_channels", cfg.discriminator.base_channels);
    cfg.discriminator.landmark_channels = cfg.generator.landmark_channels;
    return cfg;
}

std::vector<Sample> load_manifest(const std::string& manifest_path, int image_size) {
    std::string text = io::read_text_file(manifest_path);
    fs::path base = fs::path(manifest_path).parent_path();
    std::vector<Sample> samples;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw Error("manifest line " + std::to_string(lineno) +
                        " is not three tab-separated paths");
        std::string pc = (base / line.substr(0, t1)).string();
        std::string pm = (base / line.substr(t1 + 1, t2 - t1 - 1)).string();
        std::string pg = (base / line.substr(t2 + 1)).string();
        Sample s;
        s.id = fs::path(line.substr(0, t1)).stem().string();
        s.corrupted = io::load_image(pc);
        s.mask = io::load_mask(pm);
        s.gt = io::load_image(pg);
        if (s.corrupted.shape()[0] != image_size || s.corrupted.shape()[1] != image_size)
            s.corrupted = bilinear_resize(s.corrupted, image_size, image_size);
        if (s.gt.shape()[0] != image_size || s.gt.shape()[1] != image_size)
            s.gt = bilinear_resize(s.gt, image_size, image_size);
        if (s.mask.shape()[0] != image_size || s.mask.shape()[1] != image_size)
            s.mask = nearest_resize(s.mask, image_size, image_size);
        if (s.corrupted.shape()[2] == 1)
            s.corrupted = concat({s.corrupted, s.corrupted, s.corrupted}, 2);
        if (s.gt.shape()[2] == 1) s.gt = concat({s.gt, s.gt, s.gt}, 2);
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw Error("manifest has no samples: " + manifest_path);
    return samples;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.8g", v);
    return buf;
}

struct CheckpointWriter {
    const std::string& out_dir;
    TrainResult& result;

    std::string write(const std::string& name, const ParamStore& store) {
        fs::create_directories(out_dir);
        std::string path = (fs::path(out_dir) / (name + ".ckpt")).string();
        io::save_checkpoint(store, path);
        result.checkpoints.push_back(path);
        result.last_good_checkpoint = path;
        return path;
    }
};

}  // namespace

TrainResult train_two_stage(const TrainConfig& cfg, const std::vector<Sample>& data,
                            const std::string& out_dir, const std::string& detector_init) {
    if (cfg.stage != "detector" && cfg.stage != "joint" && cfg.stage != "inpainter")
        throw ContractError("unknown training stage: " + cfg.stage);
    bool with_detector = cfg.stage != "inpainter";
    bool with_generator = cfg.stage != "detector";

    SplitMix64 rng(cfg.seed);
    ParamStore det_params, gen_params, disc_params;
    std::unique_ptr<detect::Detector> detector;
    std::unique_ptr<inpaint::Generator> generator;
    std::unique_ptr<gan::Discriminator> discriminator;
    std::unique_ptr<loss::FeatureExtractor> fx;

    if (with_detector) {
        SplitMix64 det_rng = rng.fork(1);
        detector = std::make_unique<detect::Detector>(det_params, cfg.detector, det_rng);
        if (!detector_init.empty()) det_params.load_values(io::load_checkpoint(detector_init));
    }
    if (with_generator) {
        SplitMix64 gen_rng = rng.fork(2);
        SplitMix64 disc_rng = rng.fork(3);
        generator = std::make_unique<inpaint::Generator>(gen_params, cfg.generator, gen_rng);
        discriminator =
            std::make_unique<gan::Discriminator>(disc_params, cfg.discriminator, disc_rng);
        fx = std::make_unique<loss::FeatureExtractor>(cfg.fx_seed);
    }
    inpaint::LandmarkMap landmarks = inpaint::template_landmarks(cfg.image_size, cfg.image_size);

    AdamConfig adam_det{cfg.lr_detector, cfg.beta1, cfg.beta2, 1e-8};
    AdamConfig adam_gen{cfg.lr_generator, cfg.beta1, cfg.beta2, 1e-8};
    AdamConfig adam_disc{cfg.lr_discriminator, cfg.beta1, cfg.beta2, 1e-8};
    Adam opt_det(adam_det), opt_gen(adam_gen), opt_disc(adam_disc);

    TrainResult result;
    CheckpointWriter writer{out_dir, result};
    std::ostringstream log;
    if (cfg.stage == "detector")
        log << "step\tdet_loss\n";
    else if (cfg.stage == "inpainter")
        log << "step\ttotal\trecons\tadv_g\tperc\tstyle\ttv\tadv_d\n";
    else
        log << "step\ttotal\trecons\tadv_g\tperc\tstyle\ttv\tdet_loss\tadv_d\n";

    Graph& graph = Graph::current();
    int n = static_cast<int>(data.size());
    bool logged_first = false;

    for (int step = 0; step < cfg.steps; ++step) {
        graph.clear();
        det_params.zero_grads();
        gen_params.zero_grads();
        disc_params.zero_grads();

        Tensor batch_loss = Tensor::scalar(0.0);
        double recons_v = 0, advg_v = 0, perc_v = 0, style_v = 0, tv_v = 0, det_v = 0;
        std::vector<Image> fakes;  // detached, for the discriminator step
        std::vector<const Sample*> batch;

        for (int b = 0; b < cfg.batch_size; ++b)
            batch.push_back(&data[static_cast<size_t>((step * cfg.batch_size + b) % n)]);

        for (const Sample* s : batch) {
            Tensor sample_loss = Tensor::scalar(0.0);
            if (cfg.stage == "detector") {
                detect::DetectorOutput out = detector->forward(s->corrupted);
                Tensor dl = detect::detection_loss(out.mask_prob, s->mask);
                det_v += dl.value();
                sample_loss = dl;
            } else {
                Tensor mask_for_blend;  // soft in joint mode, gt otherwise
                BinaryMask hard_mask;
                if (cfg.stage == "joint") {
                    detect::DetectorOutput out = detector->forward(s->corrupted);
                    Tensor dl = detect::detection_loss(out.mask_prob, s->mask);
                    det_v += dl.value();
                    sample_loss = scale(dl, cfg.detection_loss_weight);
                    mask_for_blend = out.mask_prob;
                    hard_mask = BinaryMask({cfg.image_size, cfg.image_size});
                    for (int64_t i = 0; i < mask_for_blend.numel(); ++i)
                        hard_mask[i] = mask_for_blend[i] >= 0.5 ? 1.0 : 0.0;
                } else {
                    mask_for_blend = s->mask;
                    hard_mask = s->mask;
                }
                Image i_m_bin = data::binary_masked(s->corrupted, mask_for_blend);
                Image pred = generator->generate(i_m_bin, mask_for_blend, landmarks);

                Tensor recons = loss::reconstruction_loss(pred, s->gt, hard_mask);
                Tensor d_fake = (*discriminator)(pred, landmarks);
                auto [adv_g, adv_d_unused] = gan::lsgan_losses(d_fake, d_fake, cfg.lsgan_standard);
                Tensor perc = loss::perceptual_loss(pred, s->gt, *fx);
                Tensor style = loss::style_loss(pred, s->gt, hard_mask, *fx);
                Tensor tv = loss::tv_loss(pred);
                Tensor total = loss::total_loss(recons, adv_g, perc, style, tv, cfg.weights);
                sample_loss = add(sample_loss, total);
                recons_v += recons.value();
                advg_v += adv_g.value();
                perc_v += perc.value();
                style_v += style.value();
                tv_v += tv.value();
                fakes.push_back(pred.detach());
            }
            batch_loss = add(batch_loss, scale(sample_loss, 1.0 / cfg.batch_size));
        }

        double loss_value = batch_loss.value();
        if (!std::isfinite(loss_value)) {
            std::string path = writer.write(cfg.stage + "_lastgood",
                                            with_detector && !with_generator ? det_params
                                                                             : gen_params);
            result.aborted = true;
            log << step << "\tnon-finite loss, aborting; last good checkpoint " << path << "\n";
            break;
        }

        graph.backward(batch_loss);
        if (with_detector) opt_det.step(det_params);
        if (with_generator) opt_gen.step(gen_params);

        double advd_v = 0;
        if (with_generator) {
            // discriminator step on detached fakes
            graph.clear();
            disc_params.zero_grads();
            Tensor d_loss = Tensor::scalar(0.0);
            for (size_t b = 0; b < fakes.size(); ++b) {
                Tensor d_fake = (*discriminator)(fakes[b], landmarks);
                Tensor d_real = (*discriminator)(batch[b]->gt, landmarks);
                auto [g_unused, adv_d] = gan::lsgan_losses(d_fake, d_real, cfg.lsgan_standard);
                d_loss = add(d_loss, scale(adv_d, 1.0 / static_cast<double>(fakes.size())));
            }
            advd_v = d_loss.value();
            if (!std::isfinite(advd_v)) {
                std::string path = writer.write(cfg.stage + "_lastgood", gen_params);
                result.aborted = true;
                log << step << "\tnon-finite discriminator loss, aborting; last good checkpoint "
                    << path << "\n";
                break;
            }
            graph.backward(d_loss);
            opt_disc.step(disc_params);
        }
        graph.clear();

        if (step % cfg.log_every == 0 || step + 1 == cfg.steps) {
            int bs = cfg.batch_size;
            log << step;
            if (cfg.stage == "detector") {
                log << "\t" << fmt(det_v / bs);
            } else {
                double total_avg = loss_value;
                log << "\t" << fmt(total_avg) << "\t" << fmt(recons_v / bs) << "\t"
                    << fmt(advg_v / bs) << "\t" << fmt(perc_v / bs) << "\t" << fmt(style_v / bs)
                    << "\t" << fmt(tv_v / bs);
                if (cfg.stage == "joint") log << "\t" << fmt(det_v / bs);
                log << "\t" << fmt(advd_v);
            }
            log << "\n";
            double headline = cfg.stage == "detector" ? det_v / bs : loss_value;
            if (!logged_first) {
                result.first_logged_loss = headline;
                logged_first = true;
            }
            result.final_logged_loss = headline;
        }

        if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
            char suffix[32];
            std::snprintf(suffix, sizeof(suffix), "_%06d", step + 1);
            if (with_detector) writer.write("detector" + std::string(suffix), det_params);
            if (with_generator) {
                writer.write("generator" + std::string(suffix), gen_params);
                writer.write("discriminator" + std::string(suffix), disc_params);
            }
        }
    }

    if (!result.aborted) {
        if (with_detector) writer.write("detector", det_params);
        if (with_generator) {
            writer.write("generator", gen_params);
            writer.write("discriminator", disc_params);
        }
    }
    fs::create_directories(out_dir);
    io::write_text_file((fs::path(out_dir) / "train_log.tsv").string(), log.str());
    return result;
}

}  // namespace ftdr::train
