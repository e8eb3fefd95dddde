#include "ftdr/metrics.hpp"

#include <cmath>
#include <sstream>

#include "ftdr/frequency.hpp"

namespace ftdr::metrics {

double psnr(const Image& pred, const Image& gt) {
    if (pred.shape() != gt.shape()) throw ShapeError("psnr shape mismatch");
    double mse = 0.0;
    for (int64_t i = 0; i < pred.numel(); ++i) {
        double d = pred[i] - gt[i];
        mse += d * d;
    }
    mse /= static_cast<double>(pred.numel());
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(static_cast<size_t>(size) * size);
    double c = (size - 1) / 2.0;
    double total = 0.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double v = std::exp(-((y - c) * (y - c) + (x - c) * (x - c)) / (2.0 * sigma * sigma));
            w[static_cast<size_t>(y) * size + x] = v;
            total += v;
        }
    for (auto& v : w) v /= total;
    return w;
}

}  // namespace

double ssim(const Image& pred, const Image& gt) {
    if (pred.shape() != gt.shape()) throw ShapeError("ssim shape mismatch");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    Tensor x = freq::luma(pred);
    Tensor y = freq::luma(gt);
    int H = x.shape()[0], W = x.shape()[1];
    if (H < kWin || W < kWin)
        throw ContractError("ssim: image smaller than the 11x11 window");
    static const std::vector<double> win = gaussian_window(kWin, kSigma);

    double acc = 0.0;
    int64_t count = 0;
    for (int oy = 0; oy + kWin <= H; ++oy) {
        for (int ox = 0; ox + kWin <= W; ++ox) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (int wy = 0; wy < kWin; ++wy)
                for (int wx = 0; wx < kWin; ++wx) {
                    double wv = win[static_cast<size_t>(wy) * kWin + wx];
                    double xv = x[static_cast<int64_t>(oy + wy) * W + ox + wx];
                    double yv = y[static_cast<int64_t>(oy + wy) * W + ox + wx];
                    mx += wv * xv;
                    my += wv * yv;
                    mxx += wv * xv * xv;
                    myy += wv * yv * yv;
                    mxy += wv * xv * yv;
                }
            double vx = mxx - mx * mx;
            double vy = myy - my * my;
            double cxy = mxy - mx * my;
            double num = (2.0 * mx * my + kC1) * (2.0 * cxy + kC2);
            double den = (mx * mx + my * my + kC1) * (vx + vy + kC2);
            acc += num / den;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

double mask_mae(const Tensor& prob, const BinaryMask& gt) {
    if (prob.shape() != gt.shape()) throw ShapeError("mask_mae shape mismatch");
    double acc = 0.0;
    for (int64_t i = 0; i < prob.numel(); ++i) acc += std::fabs(prob[i] - gt[i]);
    return 100.0 * acc / static_cast<double>(prob.numel());
}

double mask_iou(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.shape() != gt.shape()) throw ShapeError("mask_iou shape mismatch");
    int64_t inter = 0, uni = 0;
    for (int64_t i = 0; i < pred.numel(); ++i) {
        bool p = pred[i] != 0.0, g = gt[i] != 0.0;
        inter += p && g;
        uni += p || g;
    }
    if (uni == 0) return 100.0;  // both empty, by convention
    return 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
}

double ics(const Image& pred, const Image& gt, const loss::FeatureExtractor& fx) {
    NoGradGuard ng;
    Tensor fp = fx.deepest_descriptor(pred);
    Tensor fg = fx.deepest_descriptor(gt);
    double dot = 0.0, np = 0.0, ng2 = 0.0;
    for (int64_t i = 0; i < fp.numel(); ++i) {
        dot += fp[i] * fg[i];
        np += fp[i] * fp[i];
        ng2 += fg[i] * fg[i];
    }
    if (np < 1e-24 || ng2 < 1e-24) return 0.0;  // zero-norm feature
    return dot / (std::sqrt(np) * std::sqrt(ng2));
}

std::string EvalReport::to_tsv() const {
    std::ostringstream os;
    os << "id\tinterval\tpsnr\tssim\tmae\tiou\tics\n";
    auto cell = [&](double v, bool missing) {
        if (missing)
            os << "-";
        else
            os << v;
    };
    for (const auto& r : rows) {
        os << r.id << "\t";
        if (r.interval < 0)
            os << "-";
        else
            os << r.interval;
        os << "\t" << r.psnr << "\t" << r.ssim << "\t";
        cell(r.mae, r.mae < 0);
        os << "\t";
        cell(r.iou, r.iou < 0);
        os << "\t" << r.ics << "\n";
    }
    // per-interval aggregates (means of rows in each interval)
    os << "\n# aggregate\ninterval\tcount\tpsnr\tssim\tmae\tiou\tics\n";
    for (int iv = 0; iv < 6; ++iv) {
        int n = 0;
        double ps = 0, ss = 0, ma = 0, io = 0, ic = 0;
        int n_mask = 0;
        for (const auto& r : rows) {
            if (r.interval != iv) continue;
            ++n;
            ps += r.psnr;
            ss += r.ssim;
            ic += r.ics;
            if (r.mae >= 0) {
                ma += r.mae;
                io += r.iou;
                ++n_mask;
            }
        }
        if (n == 0) continue;
        os << iv << "\t" << n << "\t" << ps / n << "\t" << ss / n << "\t";
        cell(n_mask ? ma / n_mask : -1, n_mask == 0);
        os << "\t";
        cell(n_mask ? io / n_mask : -1, n_mask == 0);
        os << "\t" << ic / n << "\n";
    }
    return os.str();
}

}  // namespace ftdr::metrics
