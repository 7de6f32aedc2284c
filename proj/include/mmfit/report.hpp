#pragma once

#include "mmfit/datagen.hpp"
#include "mmfit/net.hpp"
#include "mmfit/trainer.hpp"

#include <string>
#include <vector>

namespace mmfit {

/// Per-sample metrics in CSV form:
/// sample_id,k_true,k_est_sod,k_est_silh,error_rate,nmi,r_<kmin>..r_<kmax>
/// Cells without a value (no model selection run) are left empty.
void write_metrics_report(const std::string& path, const EvalSummary& summary,
                          int kmin, int kmax);

/// epoch,train_loss,val_error,val_nmi
void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);

/// sample_id,point_index,z1..zd,label — one row per embedded point, full
/// round-trip precision.
void write_embeddings_csv(const std::string& path, const EmbedNet& net,
                          const std::vector<Sample>& dataset);

}  // namespace mmfit
