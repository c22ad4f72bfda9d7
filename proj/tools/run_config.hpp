#pragma once

#include <string>

#include "rwae/dataset.hpp"
#include "rwae/kv.hpp"
#include "rwae/train.hpp"

namespace rwae::cli {

// The on-disk union of generator and training configuration plus paths and
// the preset selector. Serialized as sectioned key=value text; every command
// prints the resolved form before acting, and that dump re-parses to an
// identical RunConfig.
struct RunConfig {
    std::string command;
    std::string preset; // empty or smmnist-like|sprites-like|mug-mmd|mug-gan
    GeneratorConfig gen;
    TrainConfig train;
    std::string dataset_path;
    std::string train_dataset_path; // eval only: classifier fitting split
    std::string checkpoint_path;
    std::string output_path; // file or directory depending on the command

    std::string to_text() const;
    static RunConfig from_text(const std::string& text); // strict keys
};

void gen_to_kv(const GeneratorConfig& g, KvFile& kv, const std::string& section = "data");
GeneratorConfig gen_from_kv(const KvFile& kv, const std::string& section = "data");

// Applies RWAE_SEED when the seed was not set by flag or file.
std::uint64_t env_seed_fallback(std::uint64_t current, bool explicitly_set);

} // namespace rwae::cli
