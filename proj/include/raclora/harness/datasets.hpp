#ifndef RACLORA_HARNESS_DATASETS_HPP
#define RACLORA_HARNESS_DATASETS_HPP

// Synthetic regression data and its on-disk form.
//
// Generator conventions: features are i.i.d. N(0, 1); w_true is i.i.d.
// N(0, 1); linear targets are X w_true + 0.01 noise; logistic labels are
// sign(X w_true + noise). A fine-tuning task shifts w_true by an independent
// N(0, task_shift^2) vector so that the pre-trained model is not already
// optimal.

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "raclora/errors.hpp"
#include "raclora/harness/trace_io.hpp"
#include "raclora/linalg.hpp"
#include "raclora/objectives.hpp"
#include "raclora/random.hpp"

namespace raclora::harness {

enum class DataKind { LinReg, LogReg };

inline std::string to_string(DataKind k) { return k == DataKind::LinReg ? "linreg" : "logreg"; }

inline DataKind parse_data_kind(const std::string& s) {
    if (s == "linreg") return DataKind::LinReg;
    if (s == "logreg") return DataKind::LogReg;
    throw InvalidConfig("unknown dataset kind '" + s + "'");
}

struct Dataset {
    DataKind kind = DataKind::LinReg;
    Matrix x;
    Vector y;
    double reg_lambda = 0.0;
    int rows = 0;
    int cols = 0;

    RegressionSpec spec() const { return {x, y, reg_lambda, rows, cols}; }

    Objective objective() const {
        return kind == DataKind::LinReg ? make_linear_regression(spec()) : make_logistic_regression(spec());
    }
};

struct SyntheticParams {
    int samples = 1000;
    int rows = 10;
    int cols = 10;
    double reg_lambda = 1e-4;
    double noise = 0.01;  // linreg target noise; logreg uses unit noise inside sign()
};

// Draws X and the targets for a given ground-truth vector.
inline Dataset synthesize(DataKind kind, const SyntheticParams& p, const Vector& w_true, RandomStream& rng) {
    const int d = p.rows * p.cols;
    if (p.samples < 1 || p.rows < 1 || p.cols < 1) throw InvalidConfig("synthetic data: sizes must be positive");
    if (w_true.size() != d) throw InvalidConfig("synthetic data: w_true has the wrong length");
    Dataset ds;
    ds.kind = kind;
    ds.reg_lambda = p.reg_lambda;
    ds.rows = p.rows;
    ds.cols = p.cols;
    ds.x = Matrix(p.samples, d);
    for (Eigen::Index i = 0; i < ds.x.size(); ++i) ds.x.data()[i] = rng.normal();
    const Vector clean = ds.x * w_true;
    ds.y = Vector(p.samples);
    for (int i = 0; i < p.samples; ++i) {
        if (kind == DataKind::LinReg) {
            ds.y(i) = clean(i) + p.noise * rng.normal();
        } else {
            ds.y(i) = (clean(i) + rng.normal() >= 0.0) ? 1.0 : -1.0;
        }
    }
    return ds;
}

inline Vector gaussian_vector(int d, RandomStream& rng) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.normal();
    return v;
}

struct LinRegPreset {
    Dataset pretrain;
    Dataset finetune;
};

// 3000 pre-training + 1000 fine-tuning samples, d = 100 as 10 x 10, ridge 1e-4.
inline LinRegPreset linreg_preset(std::uint64_t seed, double task_shift = 1.0) {
    RandomStream rng(seed);
    SyntheticParams p{3000, 10, 10, 1e-4, 0.01};
    const Vector w_true = gaussian_vector(100, rng);
    LinRegPreset out;
    out.pretrain = synthesize(DataKind::LinReg, p, w_true, rng);
    const Vector w_task = w_true + task_shift * gaussian_vector(100, rng);
    p.samples = 1000;
    out.finetune = synthesize(DataKind::LinReg, p, w_task, rng);
    return out;
}

// 2000 samples, d = 100 as 10 x 10, ridge 0.1.
inline Dataset logreg_preset(std::uint64_t seed) {
    RandomStream rng(seed);
    const SyntheticParams p{2000, 10, 10, 0.1, 0.0};
    const Vector w_true = gaussian_vector(100, rng);
    return synthesize(DataKind::LogReg, p, w_true, rng);
}

// Ridge fit on the pre-training data, used as W^0 for fine-tuning.
inline Matrix pretrained_weights(const Dataset& pretrain) { return minimize(pretrain.objective()).w; }

inline constexpr const char* kDatasetMagic = "# raclora-dataset v1";

inline std::string serialize_dataset(const Dataset& ds) {
    std::ostringstream out;
    out << kDatasetMagic << '\n';
    out << "# kind=" << to_string(ds.kind) << '\n';
    out << "# samples=" << ds.x.rows() << '\n';
    out << "# features=" << ds.x.cols() << '\n';
    out << "# reg_lambda=" << format_real(ds.reg_lambda) << '\n';
    out << "# reshape=" << ds.rows << 'x' << ds.cols << '\n';
    out << 'y';
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) out << ",x" << j;
    out << '\n';
    for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
        out << format_real(ds.y(i));
        for (Eigen::Index j = 0; j < ds.x.cols(); ++j) out << ',' << format_real(ds.x(i, j));
        out << '\n';
    }
    return out.str();
}

inline Dataset parse_dataset(const std::string& text, const std::string& origin = "dataset") {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kDatasetMagic) throw IoError(origin + ": not a dataset file");
    Dataset ds;
    long samples = -1;
    long features = -1;
    while (std::getline(in, line) && line.rfind("# ", 0) == 0) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError(origin + ": malformed header");
        const std::string key = line.substr(2, eq - 2);
        const std::string value = line.substr(eq + 1);
        if (key == "kind") ds.kind = parse_data_kind(value);
        else if (key == "samples") samples = static_cast<long>(parse_u64(value, origin));
        else if (key == "features") features = static_cast<long>(parse_u64(value, origin));
        else if (key == "reg_lambda") ds.reg_lambda = parse_real(value, origin);
        else if (key == "reshape") {
            const auto x = value.find('x');
            if (x == std::string::npos) throw IoError(origin + ": malformed reshape");
            ds.rows = static_cast<int>(parse_u64(value.substr(0, x), origin));
            ds.cols = static_cast<int>(parse_u64(value.substr(x + 1), origin));
        }
    }
    if (samples < 1 || features < 1) throw IoError(origin + ": missing sample/feature counts");
    // `line` now holds the column line.
    ds.x = Matrix(samples, features);
    ds.y = Vector(samples);
    for (long i = 0; i < samples; ++i) {
        if (!std::getline(in, line)) throw IoError(origin + ": truncated data");
        std::istringstream ls(line);
        std::string field;
        long j = -1;
        while (std::getline(ls, field, ',')) {
            if (j >= features) throw IoError(origin + ": too many columns");
            const double v = parse_real(field, origin);
            if (j < 0) ds.y(i) = v;
            else ds.x(i, j) = v;
            ++j;
        }
        if (j != features) throw IoError(origin + ": too few columns");
    }
    return ds;
}

inline void write_dataset(const std::string& path, const Dataset& ds) { write_text_file(path, serialize_dataset(ds)); }

inline Dataset read_dataset(const std::string& path) { return parse_dataset(read_text_file(path), path); }

}  // namespace raclora::harness

#endif  // RACLORA_HARNESS_DATASETS_HPP
