// Acceptance checks. Run with a criterion number ("acceptance 7") or with no
// argument to run all of them. Each check prints one PASS/FAIL line and the
// process exits non-zero when any check fails.

#include <vframe/colorfeat.hpp>
#include <vframe/core/csv.hpp>
#include <vframe/core/log.hpp>
#include <vframe/core/parallel.hpp>
#include <vframe/core/random.hpp>
#include <vframe/learn.hpp>
#include <vframe/pipeline.hpp>
#include <vframe/stats.hpp>
#include <vframe/textfeat.hpp>

#include "oracles.hpp"
#include "temp_dir.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

using namespace vframe;
using testing::read_file;
using testing::TempDir;
using testing::write_file;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what)
    {
        if (!ok) {
            failures.push_back(what);
            pass = false;
        }
    }

    std::string report() const
    {
        std::string text = detail.str();
        for (std::size_t i = 0; i < failures.size(); ++i) {
            text += (i == 0 ? (text.empty() ? "failed: " : "; failed: ") : "; ") + failures[i];
        }
        return text;
    }
};

std::string fmt(double x, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

Frame half_and_half(int w, int h, std::array<std::uint8_t, 3> left, std::array<std::uint8_t, 3> right)
{
    std::vector<std::uint8_t> px;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto& c = x < w / 2 ? left : right;
            px.insert(px.end(), c.begin(), c.end());
        }
    }
    return Frame::from_rgb(w, h, std::move(px));
}

// 1 -------------------------------------------------------------------------

void colorfulness_formula(Outcome& out)
{
    const double red = colorfulness(Frame::uniform(64, 48, 255, 0, 0));
    out.expect(std::abs(red - 85.530) <= 0.001, "pure red gave " + fmt(red, 9));
    // 0.3 * |(255, 127.5)| straight from the opponent components.
    out.expect(std::abs(red - 0.3 * std::hypot(255.0, 127.5)) < 1e-9, "pure red differs from 0.3*hypot(255,127.5)");

    Rng rng(101);
    for (int i = 0; i < 200; ++i) {
        std::vector<std::uint8_t> px;
        for (int p = 0; p < 32 * 24; ++p) {
            const auto v = static_cast<std::uint8_t>(rng.below(256));
            px.insert(px.end(), {v, v, v});
        }
        const double c = colorfulness(Frame::from_rgb(32, 24, std::move(px)));
        if (c != 0.0) {
            out.expect(false, "grayscale frame gave " + fmt(c));
            break;
        }
    }

    const auto split = half_and_half(64, 48, {255, 0, 0}, {0, 255, 0});
    const double half = colorfulness(split);
    out.expect(std::abs(half - 293.25) <= 0.01, "half red / half green gave " + fmt(half, 9));
    const double oracle = oracle::colorfulness(oracle::pixels_of(split.pixels));
    out.expect(std::abs(half - oracle) < 1e-9, "half-split differs from the direct oracle");
    out.detail << "red " << fmt(red, 8) << ", half red/green " << fmt(half, 8);
}

// 2 -------------------------------------------------------------------------

void hsv_roundtrip(Outcome& out)
{
    Rng rng(202);
    int worst = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto r = static_cast<std::uint8_t>(rng.below(256));
        const auto g = static_cast<std::uint8_t>(rng.below(256));
        const auto b = static_cast<std::uint8_t>(rng.below(256));
        const Rgb back = hsv_to_rgb(rgb_to_hsv(r, g, b));
        worst = std::max({worst, std::abs(int(back.r) - int(r)), std::abs(int(back.g) - int(g)),
                          std::abs(int(back.b) - int(b))});
    }
    out.expect(worst <= 1, "round trip off by " + std::to_string(worst));

    const auto anchor = [&](std::uint8_t r, std::uint8_t g, std::uint8_t b, Hsv want, const char* name) {
        const Hsv got = rgb_to_hsv(r, g, b);
        out.expect(got.h == want.h && got.s == want.s && got.v == want.v,
                   std::string(name) + " gave (" + fmt(got.h) + ", " + fmt(got.s) + ", " + fmt(got.v) + ")");
        out.expect(hsv_to_rgb(want) == Rgb{r, g, b}, std::string(name) + " does not invert exactly");
    };
    anchor(255, 0, 0, {0.0, 255.0, 255.0}, "red");
    anchor(128, 128, 128, {0.0, 0.0, 128.0}, "gray");
    anchor(0, 255, 255, {180.0, 255.0, 255.0}, "cyan");
    out.detail << "10000 triples, worst channel error " << worst;
}

// 3 -------------------------------------------------------------------------

void welch(Outcome& out)
{
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{2, 4, 6, 8, 10};
    const auto hand = stats::welch_t_test(a, b);
    out.expect(std::abs(hand.t - (-1.8974)) < 5e-5, "hand t = " + fmt(hand.t));
    out.expect(std::abs(hand.df - 5.8824) < 5e-5, "hand df = " + fmt(hand.df));

    Rng rng(303);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto na = 2 + rng.below(29);
        const auto nb = 2 + rng.below(29);
        const double shift = rng.normal(0.0, 1.0);
        const double sa = rng.uniform(0.2, 5.0), sb = rng.uniform(0.2, 5.0);
        std::vector<double> xa, xb;
        for (std::size_t i = 0; i < na; ++i) {
            xa.push_back(rng.normal(0.0, sa));
        }
        for (std::size_t i = 0; i < nb; ++i) {
            xb.push_back(rng.normal(shift, sb));
        }
        // Statistic and degrees of freedom from the textbook formulas.
        const double va = oracle::sample_variance(xa) / double(na);
        const double vb = oracle::sample_variance(xb) / double(nb);
        const double t = (oracle::mean(xa) - oracle::mean(xb)) / std::sqrt(va + vb);
        const double df = (va + vb) * (va + vb) / (va * va / double(na - 1) + vb * vb / double(nb - 1));
        const auto got = stats::welch_t_test(xa, xb);
        const double want = oracle::t_two_sided_by_quadrature(t, df);
        worst = std::max(worst, std::abs(got.p - want));
        if (std::abs(got.t - t) > 1e-9 * std::max(1.0, std::abs(t))) {
            out.expect(false, "t mismatch on trial " + std::to_string(trial));
            break;
        }
    }
    out.expect(worst <= 1e-8, "max |p - oracle| = " + fmt(worst));
    out.detail << "hand t " << fmt(hand.t, 5) << ", df " << fmt(hand.df, 5) << ", max |p - oracle| " << fmt(worst, 3);
}

// 4 -------------------------------------------------------------------------

void benjamini_hochberg(Outcome& out)
{
    const auto round3 = [](double x) { return std::round(x * 1000.0) / 1000.0; };
    const std::vector<double> p7{0.3, 0.01, 0.2, 0.5, 0.04, 0.7, 0.9};
    const auto r7 = stats::benjamini_hochberg(p7, 0.05);
    const double rank1 = *std::min_element(r7.thresholds.begin(), r7.thresholds.end());
    out.expect(round3(rank1) == 0.007, "m = 7 rank-1 threshold " + fmt(rank1));

    const std::vector<double> p6{0.6, 0.001, 0.2, 0.03, 0.01, 0.4};
    auto t6 = stats::benjamini_hochberg(p6, 0.05).thresholds;
    std::sort(t6.begin(), t6.end());
    const std::vector<double> table{0.008, 0.017, 0.025, 0.033, 0.042, 0.050};
    for (std::size_t i = 0; i < 6; ++i) {
        out.expect(round3(t6[i]) == table[i], "m = 6 rank " + std::to_string(i + 1) + " threshold " + fmt(t6[i]));
    }

    Rng rng(404);
    int agree = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p(1 + rng.below(10));
        for (auto& x : p) {
            // A mix of small and large p-values so rejections happen.
            x = rng.uniform() < 0.4 ? rng.uniform(0.0, 0.02) : rng.uniform();
        }
        const auto got = stats::benjamini_hochberg(p, 0.05).rejected;
        agree += got == oracle::bh_brute_force(p, 0.05) ? 1 : 0;
    }
    out.expect(agree == 100, std::to_string(100 - agree) + " of 100 vectors disagree with brute force");
    out.detail << "m=7 rank-1 " << fmt(rank1, 4) << ", m=6 thresholds match, brute force " << agree << "/100";
}

// 5 -------------------------------------------------------------------------

void cohens_d(Outcome& out)
{
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{2, 4, 6, 8, 10};
    const double hand = stats::cohens_d(a, b);
    out.expect(hand == -1.2, "hand case gave " + fmt(hand, 17));

    Rng rng(505);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> xa(2 + rng.below(20)), xb(2 + rng.below(20));
        for (auto& x : xa) {
            x = rng.normal(0.0, 2.0);
        }
        for (auto& x : xb) {
            x = rng.normal(1.0, 3.0);
        }
        const double d = stats::cohens_d(xa, xb);
        const double c = rng.uniform(-100.0, 100.0);
        auto sa = xa, sb = xb;
        for (auto& x : sa) {
            x += c;
        }
        for (auto& x : sb) {
            x += c;
        }
        worst = std::max({worst, std::abs(stats::cohens_d(sa, sb) - d), std::abs(stats::cohens_d(xb, xa) + d)});
    }
    out.expect(worst < 1e-9, "invariance error " + fmt(worst));
    out.detail << "hand d " << fmt(hand) << ", max invariance error " << fmt(worst, 3);
}

// 6 -------------------------------------------------------------------------

void krippendorff(Outcome& out)
{
    Eigen::MatrixXd perfect(3, 6);
    perfect << 0, 1, 2, 1, 0, 2, //
        0, 1, 2, 1, 0, 2,        //
        0, 1, 2, 1, 0, 2;
    const double one = stats::krippendorff_alpha_nominal(perfect);
    out.expect(one == 1.0, "perfect agreement gave " + fmt(one, 17));

    Eigen::MatrixXd opposed(2, 2);
    opposed << 0, 1, //
        1, 0;
    const double neg = stats::krippendorff_alpha_nominal(opposed);
    out.expect(std::abs(neg + 0.5) <= 1e-12, "systematic disagreement gave " + fmt(neg, 17));
    out.detail << "perfect " << fmt(one) << ", disagreement " << fmt(neg);
}

// 7 -------------------------------------------------------------------------

/// A 16x16 gray frame whose mean perceived brightness is `target` to within
/// 1/256: the perceived weights sum to one, so a gray pixel's brightness is its value.
Frame gray_frame(double target)
{
    target = std::clamp(target, 0.0, 254.0);
    const auto base = static_cast<int>(std::floor(target));
    const auto bright = static_cast<int>(std::lround((target - base) * 256.0));
    std::vector<std::uint8_t> px;
    for (int i = 0; i < 256; ++i) {
        const auto v = static_cast<std::uint8_t>(base + (i < bright ? 1 : 0));
        px.insert(px.end(), {v, v, v});
    }
    return Frame::from_rgb(16, 16, std::move(px));
}

/// Draws standardized so the sample has exactly the requested mean and sd.
std::vector<double> exact_sample(Rng& rng, std::size_t n, double mean, double sd)
{
    std::vector<double> z(n);
    for (auto& x : z) {
        x = rng.normal();
    }
    const double m = oracle::mean(z);
    const double s = std::sqrt(oracle::sample_variance(z));
    for (auto& x : z) {
        x = mean + sd * (x - m) / s;
    }
    return z;
}

void synthetic_comparison(Outcome& out)
{
    constexpr double mean_a = 96.53, mean_b = 103.63, d_target = 0.45;
    const double sd = (mean_b - mean_a) / d_target;
    Rng rng(707);
    const auto a = exact_sample(rng, 200, mean_a, sd);
    const auto b = exact_sample(rng, 60, mean_b, sd);

    TempDir dir;
    std::string manifest;
    const auto add_group = [&](const std::vector<double>& values, const std::string& label, char prefix) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const std::string id = prefix + std::to_string(i);
            const fs::path frames = dir.path() / "frames" / id;
            fs::create_directories(frames);
            // Five frames spread symmetrically around the video's value.
            for (int f = 0; f < 5; ++f) {
                char name[16];
                std::snprintf(name, sizeof name, "%06d.ppm", f);
                write_ppm(frames / name, gray_frame(values[i] + 3.0 * (f - 2)));
            }
            manifest += "{\"id\":\"" + id + "\",\"label\":\"" + label + "\",\"frames_dir\":\"frames/" + id + "\"}\n";
        }
    };
    add_group(a, "conspiracy", 'a');
    add_group(b, "debunking", 'b');
    write_file(dir / "manifest.jsonl", manifest);

    auto config = pipeline::default_config();
    config.manifest = dir / "manifest.jsonl";
    config.out_dir = dir / "out";
    config.text.embeddings = false;
    pipeline::cmd_features(config);
    const auto summary = pipeline::cmd_compare(config, "conspiracy", "debunking", Segment::all_frames());
    const auto report = csv::read(summary.outputs.at(0));

    bool seen = false;
    for (const auto& row : report.rows) {
        if (row[0] != "median_brightness" && row[0] != "brightness_mean") {
            continue;
        }
        seen = true;
        const double d = std::stod(row[6]);
        out.expect(row[5] == "true", row[0] + " not BH-significant (p " + row[3] + ", threshold " + row[4] + ")");
        out.expect(std::abs(d - d_target) <= 0.05, row[0] + " |d| = " + row[6]);
        out.expect(std::abs(std::stod(row[1]) - mean_a) < 0.05 && std::abs(std::stod(row[2]) - mean_b) < 0.05,
                   row[0] + " group means " + row[1] + " / " + row[2]);
        if (row[0] == "median_brightness") {
            out.detail << "median_brightness p " << row[3] << ", |d| " << row[6] << ", means " << row[1] << " / "
                       << row[2];
        }
    }
    out.expect(seen, "brightness rows missing from the report");
}

// 8 -------------------------------------------------------------------------

void mlp_gradient(Outcome& out)
{
    using Net = learn::MlpNetwork<double>;
    auto net = learn::make_mlp<double>({3, 4, 4, 1}, 808);
    Rng rng(808);
    // Nonzero biases keep every ReLU away from its kink at the evaluation point.
    for (auto& b : net.biases) {
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            b(i) = rng.uniform(0.1, 0.5);
        }
    }
    Net::Matrix Z(12, 3);
    learn::Labels y(12);
    for (Eigen::Index i = 0; i < 12; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) {
            Z(i, j) = rng.normal();
        }
        y(i) = static_cast<int>(rng.below(2));
    }
    const auto grad = learn::mlp_gradients(net, Z, y);

    double worst = 0.0;
    const double h = 1e-5;
    const auto check = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double up = learn::mlp_loss(net, Z, y);
        param = saved - h;
        const double down = learn::mlp_loss(net, Z, y);
        param = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max(std::abs(numeric) + std::abs(analytic), 1e-7);
        worst = std::max(worst, std::abs(numeric - analytic) / scale);
    };
    std::size_t count = 0;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (Eigen::Index k = 0; k < net.weights[l].size(); ++k, ++count) {
            check(net.weights[l].data()[k], grad.weights[l].data()[k]);
        }
        for (Eigen::Index k = 0; k < net.biases[l].size(); ++k, ++count) {
            check(net.biases[l](k), grad.biases[l](k));
        }
    }
    out.expect(count == 3 * 4 + 4 + 4 * 4 + 4 + 4 + 1, "unexpected parameter count " + std::to_string(count));
    out.expect(worst <= 1e-4, "max relative error " + fmt(worst));
    out.detail << count << " parameters, max relative error " << fmt(worst, 3);
}

// 9 -------------------------------------------------------------------------

/// Writes a manifest and a features.csv for `n` videos. The visual columns get
/// a class-dependent shift of `shift` standard deviations; labels are permuted
/// after the fact when `shuffle_labels` is set.
pipeline::PipelineConfig visual_corpus(const TempDir& dir, std::size_t n, double shift, bool shuffle_labels,
                                       std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<int> cls(n);
    for (std::size_t i = 0; i < n; ++i) {
        cls[i] = int(i % 2);
    }
    std::vector<int> labels = cls;
    if (shuffle_labels) {
        rng.shuffle(labels.begin(), labels.end());
    }

    pipeline::FeatureTable table;
    table.columns = aggregate_column_names();
    const auto visual = feature_vector_names();
    table.values.resize(Eigen::Index(n), Eigen::Index(table.columns.size()));
    std::string manifest;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = "v" + std::to_string(i);
        table.ids.push_back(id);
        table.segments.push_back("all");
        table.n_frames.push_back(30);
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const bool is_visual = std::find(visual.begin(), visual.end(), table.columns[c]) != visual.end();
            table.values(Eigen::Index(i), Eigen::Index(c))
                = 100.0 + 10.0 * (rng.normal() + (is_visual ? shift * cls[i] : 0.0));
        }
        manifest += "{\"id\":\"" + id + "\",\"label\":\"" + (labels[i] ? "conspiracy" : "debunking")
                    + "\",\"frames_dir\":\"frames/" + id + "\"}\n";
    }
    write_file(dir / "manifest.jsonl", manifest);
    auto config = pipeline::default_config();
    config.manifest = dir / "manifest.jsonl";
    config.out_dir = dir / "out";
    config.seed = seed;
    pipeline::write_feature_table(config.features_csv(), table);
    return config;
}

std::vector<std::string> cv_row(const pipeline::PipelineConfig& config)
{
    const auto table = csv::read(config.out_dir / "cv.csv");
    return table.rows.at(0);
}

void classification(Outcome& out)
{
    TempDir separable;
    auto config = visual_corpus(separable, 300, 1.5, false, 909);
    out.expect(config.folds == 10, "default fold count is " + std::to_string(config.folds));
    pipeline::cmd_cv(config, "rf", "visual", Segment::all_frames());
    const auto row = cv_row(config);
    const double precision = std::stod(row[2]), recall = std::stod(row[4]);
    out.expect(precision >= 0.95, "separable precision " + row[2]);
    out.expect(recall >= 0.95, "separable recall " + row[4]);
    out.detail << "separable P " << row[2] << " R " << row[4];

    for (std::uint64_t seed : {911, 912, 913}) {
        TempDir shuffled;
        auto noise = visual_corpus(shuffled, 300, 1.5, true, seed);
        pipeline::cmd_cv(noise, "rf", "visual", Segment::all_frames());
        const auto r = cv_row(noise);
        const double chance = std::stod(r[4]);
        out.expect(chance >= 0.3 && chance <= 0.7, "shuffled recall " + r[4] + " (seed " + std::to_string(seed) + ")");
        out.detail << ", shuffled R " << r[4];
    }
}

// 10 ------------------------------------------------------------------------

void permutation_importance(Outcome& out)
{
    int wins = 0;
    for (std::uint64_t run = 0; run < 100; ++run) {
        Rng rng(derive_seed(1010, run));
        const Eigen::Index n = 120;
        Eigen::MatrixXd X(n, 2);
        learn::Labels y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y(i) = int(i % 2);
            X(i, 0) = rng.normal() + 2.0 * y(i); // signal
            X(i, 1) = rng.normal();              // noise
        }
        learn::ModelSpec spec;
        spec.forest.n_trees = 50;
        const auto model = learn::train(spec, X, y, derive_seed(2020, run));
        const auto report = learn::permutation_importance(model, X, y, 5, derive_seed(3030, run));
        wins += report.features[0].mean_drop > report.features[1].mean_drop ? 1 : 0;
    }
    out.expect(wins >= 95, "signal won " + std::to_string(wins) + " of 100");
    out.detail << "signal outranked noise in " << wins << "/100 runs";
}

// 11 ------------------------------------------------------------------------

std::vector<Transcript> two_topics(std::size_t per_topic, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<Transcript> corpus;
    for (std::size_t d = 0; d < 2 * per_topic; ++d) {
        Transcript t;
        t.video_id = "doc" + std::to_string(d);
        const std::string stem = d < per_topic ? "alpha" : "omega";
        for (int i = 0; i < 60; ++i) {
            t.tokens.push_back(stem + std::to_string(rng.below(15)));
        }
        corpus.push_back(std::move(t));
    }
    return corpus;
}

void pvdm(Outcome& out)
{
    const auto corpus = two_topics(25, 1111);
    PvdmParams params;
    out.expect(params.dim == 200, "default dimension is " + std::to_string(params.dim));
    const auto full = train_pvdm(corpus, params);
    out.expect(full.dim() == 200 && full.doc_vector(0).size() == 200, "default model has the wrong dimension");

    params.dim = 16;
    params.seed = 11;
    const auto model = train_pvdm(corpus, params);
    out.expect(model.doc_vector(0).size() == 16, "dim 16 model has the wrong dimension");
    double intra = 0, inter = 0;
    int n_intra = 0, n_inter = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (std::size_t j = i + 1; j < corpus.size(); ++j) {
            const double c = cosine_similarity(model.doc_vector(i), model.doc_vector(j));
            if ((i < 25) == (j < 25)) {
                intra += c;
                ++n_intra;
            } else {
                inter += c;
                ++n_inter;
            }
        }
    }
    intra /= n_intra;
    inter /= n_inter;
    out.expect(intra > inter, "intra " + fmt(intra) + " <= inter " + fmt(inter));
    out.detail << "50 docs, dim 16: intra " << fmt(intra, 4) << ", inter " << fmt(inter, 4)
               << "; default dim 200 honored";
}

// 12 ------------------------------------------------------------------------

void determinism(Outcome& out)
{
    TempDir dir;
    Rng rng(1212);
    std::string manifest;
    for (int v = 0; v < 24; ++v) {
        const std::string id = "vid" + std::to_string(v);
        const fs::path frames = dir.path() / "frames" / id;
        fs::create_directories(frames);
        for (int f = 0; f < 6; ++f) {
            std::vector<std::uint8_t> px(24 * 18 * 3);
            for (auto& p : px) {
                p = static_cast<std::uint8_t>(rng.below(256) / (v % 2 ? 1 : 2));
            }
            char name[16];
            std::snprintf(name, sizeof name, "%06d.ppm", f);
            write_ppm(frames / name, Frame::from_rgb(24, 18, std::move(px)));
        }
        std::string words = v % 2 ? "evidence study experts data" : "secret hidden truth agenda";
        write_file(dir / (id + ".txt"), words + " " + words + " video " + std::to_string(v));
        manifest += "{\"id\":\"" + id + "\",\"label\":\"" + (v % 2 ? "debunking" : "conspiracy")
                    + "\",\"frames_dir\":\"frames/" + id + "\",\"transcript_path\":\"" + id + ".txt\"}\n";
    }
    write_file(dir / "manifest.jsonl", manifest);
    write_file(dir / "config.json", R"({
        "manifest": "manifest.jsonl",
        "segments": ["all", "first2s"],
        "text": {"pvdm": {"dim": 8, "epochs": 5, "min_count": 1}},
        "models": {"rf": {"type": "forest", "n_trees": 40}},
        "cv": {"folds": 4},
        "seed": 12
    })");

    const auto run_all = [&](const fs::path& out_dir, unsigned workers) {
        auto config = pipeline::load_config(dir / "config.json");
        config.out_dir = out_dir;
        config.workers = workers;
        pipeline::cmd_features(config);
        pipeline::cmd_compare(config, "conspiracy", "debunking", Segment::all_frames());
        pipeline::cmd_cv(config, "rf", "visual+embedding", Segment::all_frames());
        std::map<std::string, std::string> files;
        for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
            if (entry.is_regular_file()) {
                files[fs::relative(entry.path(), out_dir).string()] = read_file(entry.path());
            }
        }
        return files;
    };
    const auto first = run_all(dir / "run1", 1);
    const auto second = run_all(dir / "run2", 1);
    const auto parallel = run_all(dir / "run3", 4);
    out.expect(first.size() >= 5, "expected at least 5 output files, got " + std::to_string(first.size()));
    out.expect(first == second, "rerun outputs differ");
    out.expect(first == parallel, "outputs differ with 4 workers");

    Rng xr(1213);
    Eigen::MatrixXd X(200, 6);
    learn::Labels y(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
        y(i) = int(xr.below(2));
        for (Eigen::Index j = 0; j < 6; ++j) {
            X(i, j) = xr.normal() + (j < 2 ? y(i) : 0);
        }
    }
    learn::ForestParams params;
    params.seed = 5;
    const auto serial = learn::to_json(learn::train_forest(X, y, params));
    bool same = true;
    for (unsigned w : {2U, 3U, 8U}) {
        params.workers = w;
        same = same && learn::to_json(learn::train_forest(X, y, params)) == serial;
    }
    out.expect(same, "forest differs across worker counts");
    out.detail << first.size() << " output files byte-identical across reruns and worker counts; forest identical "
                  "for workers 1/2/3/8";
}

// 13 ------------------------------------------------------------------------

void throughput(Outcome& out)
{
    Rng rng(1313);
    std::vector<Frame> frames;
    for (int i = 0; i < 16; ++i) {
        std::vector<std::uint8_t> px(320 * 240 * 3);
        for (auto& p : px) {
            p = static_cast<std::uint8_t>(rng.next());
        }
        frames.push_back(Frame::from_rgb(320, 240, std::move(px)));
    }
    const unsigned workers = default_workers();
    constexpr std::size_t total = 4000;
    std::vector<FrameFeatures> results(total);
    const auto start = std::chrono::steady_clock::now();
    parallel_for(total, workers, [&](std::size_t i) { results[i] = frame_features(frames[i % frames.size()]); });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double fps = double(total) / seconds;
    out.expect(fps >= 1000.0, "only " + fmt(fps, 4) + " frames/s");
    out.detail << fmt(fps, 5) << " frames/s on " << workers << " hardware thread" << (workers == 1 ? "" : "s")
               << " (320x240)";
}

struct Criterion {
    int number;
    const char* title;
    std::function<void(Outcome&)> run;
    double limit_s; ///< 0 for no runtime limit
};

const std::vector<Criterion>& criteria()
{
    static const std::vector<Criterion> all{
        {1, "colorfulness formula", colorfulness_formula, 1.0},
        {2, "HSV round trip", hsv_roundtrip, 0.0},
        {3, "Welch t-test", welch, 0.0},
        {4, "Benjamini-Hochberg", benjamini_hochberg, 0.0},
        {5, "Cohen's d", cohens_d, 0.0},
        {6, "Krippendorff's alpha", krippendorff, 0.0},
        {7, "synthetic group comparison", synthetic_comparison, 60.0},
        {8, "MLP gradient check", mlp_gradient, 0.0},
        {9, "classification harness", classification, 120.0},
        {10, "permutation importance", permutation_importance, 0.0},
        {11, "PV-DM topic separation", pvdm, 0.0},
        {12, "determinism", determinism, 0.0},
        {13, "feature extraction throughput", throughput, 0.0},
    };
    return all;
}

bool run(const Criterion& c)
{
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
        c.run(out);
    } catch (const std::exception& e) {
        out.expect(false, std::string("exception: ") + e.what());
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0 && elapsed >= c.limit_s) {
        out.expect(false, "took " + fmt(elapsed, 3) + " s, limit " + fmt(c.limit_s) + " s");
    }
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", c.number, c.title,
                out.report().c_str(), elapsed);
    std::fflush(stdout);
    return out.pass;
}

} // namespace

int main(int argc, char** argv)
{
    log().set_level(spdlog::level::err);
    if (argc > 2) {
        std::fprintf(stderr, "usage: %s [criterion-number]\n", argv[0]);
        return 2;
    }
    if (argc == 2) {
        const int wanted = std::atoi(argv[1]);
        for (const auto& c : criteria()) {
            if (c.number == wanted) {
                return run(c) ? 0 : 1;
            }
        }
        std::fprintf(stderr, "no criterion %s\n", argv[1]);
        return 2;
    }
    int failures = 0;
    for (const auto& c : criteria()) {
        failures += run(c) ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
