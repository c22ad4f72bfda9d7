#include "run_config.hpp"

#include <cstdlib>
#include <iomanip>
#include <sstream>

#include "rwae/errors.hpp"

namespace rwae::cli {

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

template <typename T, typename F>
std::string join_names(const std::vector<T>& items, F&& name) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += name(items[i]);
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace

void gen_to_kv(const GeneratorConfig& g, KvFile& kv, const std::string& section) {
    kv.set(section, "image_size", std::to_string(g.image_size));
    kv.set(section, "timesteps", std::to_string(g.timesteps));
    kv.set(section, "count", std::to_string(g.count));
    kv.set(section, "shapes", join_names(g.shapes, shape_name));
    kv.set(section, "motions", join_names(g.motions, motion_name));
    kv.set(section, "sizes",
           join_names(g.sizes, [](int v) { return std::to_string(v); }));
    kv.set(section, "colors", join_names(g.colors, fmt_double));
    kv.set(section, "speed_min", std::to_string(g.speed_min));
    kv.set(section, "speed_max", std::to_string(g.speed_max));
    kv.set(section, "seed", std::to_string(g.seed));
}

GeneratorConfig gen_from_kv(const KvFile& kv, const std::string& section) {
    GeneratorConfig g;
    const KvSection* s = kv.find(section);
    if (!s) return g;
    for (const auto& [key, value] : s->entries) {
        if (key == "image_size") g.image_size = std::stoi(value);
        else if (key == "timesteps") g.timesteps = std::stoi(value);
        else if (key == "count") g.count = std::stoi(value);
        else if (key == "shapes") {
            g.shapes.clear();
            for (const auto& n : split_csv(value)) g.shapes.push_back(parse_shape(n));
        } else if (key == "motions") {
            g.motions.clear();
            for (const auto& n : split_csv(value)) g.motions.push_back(parse_motion(n));
        } else if (key == "sizes") {
            g.sizes.clear();
            for (const auto& n : split_csv(value)) g.sizes.push_back(std::stoi(n));
        } else if (key == "colors") {
            g.colors.clear();
            for (const auto& n : split_csv(value)) g.colors.push_back(std::stod(n));
        } else if (key == "speed_min") g.speed_min = std::stoi(value);
        else if (key == "speed_max") g.speed_max = std::stoi(value);
        else if (key == "seed") g.seed = std::stoull(value);
        else throw format_error("config: unknown key '" + key + "' in [" + section + "]");
    }
    return g;
}

std::string RunConfig::to_text() const {
    KvFile kv;
    kv.set("run", "command", command);
    kv.set("run", "preset", preset);
    gen_to_kv(gen, kv);
    train.to_kv(kv);
    kv.set("paths", "dataset", dataset_path);
    kv.set("paths", "train_dataset", train_dataset_path);
    kv.set("paths", "checkpoint", checkpoint_path);
    kv.set("paths", "output", output_path);
    return to_kv_text(kv);
}

RunConfig RunConfig::from_text(const std::string& text) {
    KvFile kv = parse_kv_text(text);
    RunConfig rc;
    if (const KvSection* run = kv.find("run")) {
        for (const auto& [key, value] : run->entries) {
            if (key == "command") rc.command = value;
            else if (key == "preset") rc.preset = value;
            else throw format_error("config: unknown key '" + key + "' in [run]");
        }
    }
    rc.gen = gen_from_kv(kv);
    if (kv.find("train")) rc.train = TrainConfig::from_kv(kv);
    if (const KvSection* paths = kv.find("paths")) {
        for (const auto& [key, value] : paths->entries) {
            if (key == "dataset") rc.dataset_path = value;
            else if (key == "train_dataset") rc.train_dataset_path = value;
            else if (key == "checkpoint") rc.checkpoint_path = value;
            else if (key == "output") rc.output_path = value;
            else throw format_error("config: unknown key '" + key + "' in [paths]");
        }
    }
    return rc;
}

std::uint64_t env_seed_fallback(std::uint64_t current, bool explicitly_set) {
    if (explicitly_set) return current;
    if (const char* env = std::getenv("RWAE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw config_error("RWAE_SEED is not a valid unsigned integer");
        }
    }
    return current;
}

} // namespace rwae::cli
