#pragma once

#include "texfv/autoencoder.hpp"
#include "texfv/features.hpp"
#include "texfv/gmm.hpp"
#include "texfv/serialize.hpp"
#include "texfv/svm.hpp"

namespace texfv {

// Adapters between in-memory models and bundle sections. Section names:
// "ae", "pca", "pca<i>", "gmm", "svm". A bundle without some sections is a
// valid partial bundle; loaders only touch the sections they are given.

std::vector<TaggedArray> autoencoder_to_records(const AutoencoderModel& model);
AutoencoderModel autoencoder_from_records(const std::vector<TaggedArray>& records);

std::vector<TaggedArray> pca_to_records(const PcaModel& model);
PcaModel pca_from_records(const std::vector<TaggedArray>& records);

std::vector<TaggedArray> gmm_to_records(const GaussianMixture& gmm);
GaussianMixture gmm_from_records(const std::vector<TaggedArray>& records);

std::vector<TaggedArray> svm_to_records(const LinearSvmModel& model);
LinearSvmModel svm_from_records(const std::vector<TaggedArray>& records);

}  // namespace texfv
