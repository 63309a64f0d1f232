#pragma once

#include <Eigen/Core>
#include <string>

#include "dsb/tabular.hpp"
#include "dsb/vae.hpp"

namespace dsb::model_io {

/// Everything generation needs in one file: the fitted network, the training
/// set's latent summary, its relevance weights (original y units), and the
/// tabular encoding statistics. The encoding's fitting-set matrices are not
/// stored, only the invertible mapping.
struct ModelPackage {
    vae::VaeModel model;
    vae::LatentSummary latent;
    Eigen::VectorXd weights_raw;
    tabular::EncodedMatrix encoding;
};

/// Binary layout: magic "DSBMODEL", u32 version, u32 reserved, u64 JSON
/// header length, the header (architecture, train config, encoding stats,
/// array sizes), then little-endian f64 arrays: parameters (flatten_params
/// order), mu and logvar (row-major), weights.
void save_model(const std::string& path, const ModelPackage& pkg);

/// Throws std::runtime_error on unreadable, truncated, or mismatched files.
ModelPackage load_model(const std::string& path);

}  // namespace dsb::model_io
