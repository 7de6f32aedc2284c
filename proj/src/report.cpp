#include "mmfit/report.hpp"

#include <fstream>
#include <iomanip>

namespace mmfit {

namespace {

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << std::setprecision(17);
    return out;
}

}  // namespace

void write_metrics_report(const std::string& path, const EvalSummary& summary,
                          int kmin, int kmax) {
    std::ofstream out = open_csv(path);
    out << "sample_id,k_true,k_est_sod,k_est_silh,error_rate,nmi";
    for (int k = kmin; k <= kmax; ++k) out << ",r_" << k;
    out << '\n';
    for (const SampleMetrics& m : summary.per_sample) {
        out << m.id << ',' << m.k_true << ',';
        if (m.k_sod >= 0) out << m.k_sod;
        out << ',';
        if (m.k_silh >= 0) out << m.k_silh;
        out << ',' << m.error << ',' << m.nmi_value;
        for (int k = kmin; k <= kmax; ++k) {
            out << ',';
            const std::size_t idx = static_cast<std::size_t>(k - kmin);
            if (idx < m.residuals.size()) out << m.residuals[idx];
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out = open_csv(path);
    out << "epoch,train_loss,val_error,val_nmi\n";
    for (const EpochStats& e : history) {
        out << e.epoch << ',' << e.train_loss << ',' << e.val_error << ',' << e.val_nmi
            << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_embeddings_csv(const std::string& path, const EmbedNet& net,
                          const std::vector<Sample>& dataset) {
    std::ofstream out = open_csv(path);
    out << "sample_id,point_index";
    for (int d = 1; d <= net.embed_dim; ++d) out << ",z" << d;
    out << ",label\n";
    for (const Sample& sample : dataset) {
        const Matrix z = forward(net, sample.points);
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            out << sample.id << ',' << i;
            for (Eigen::Index d = 0; d < z.cols(); ++d) out << ',' << z(i, d);
            out << ',' << sample.labels[static_cast<std::size_t>(i)] << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace mmfit
