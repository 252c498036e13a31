#ifndef PINSITE_RUNCONFIG_HPP
#define PINSITE_RUNCONFIG_HPP

#include <fstream>
#include <sstream>
#include <string>

#include "pinsite/model.hpp"
#include "pinsite/train.hpp"

namespace pinsite {

/// Flat key=value run configuration shared by all CLI subcommands. Every key
/// has a default; '#' starts a comment; unknown keys are rejected with their
/// line number. Command-line flags override file values.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    std::string data_root = "data";
    std::string out_dir = "out";
    double threshold = 0.5;

    void set_seed(std::uint64_t s) {
        model.seed = s;
        train.seed = s;
    }

    void apply_line(const std::string& key, const std::string& val, int line_no) {
        auto bad = [&](const std::string& why) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + why);
        };
        auto tuple = [&](int out[4], int n) {
            std::istringstream ls(val);
            std::string tok;
            for (int i = 0; i < n; ++i) {
                if (!std::getline(ls, tok, ',')) bad("expected " + std::to_string(n) + " comma-separated ints");
                out[i] = std::stoi(tok);
            }
        };
        int t[4];
        try {
            if (key == "model.input_size") model.input_size = std::stoi(val);
            else if (key == "model.stem1" || key == "model.stem2") {
                tuple(t, 3);
                model.stem[key == "model.stem1" ? 0 : 1] = {t[0], t[1], t[2]};
            } else if (key == "model.stage1" || key == "model.stage2" || key == "model.stage3") {
                tuple(t, 4);
                model.stages[key[11] - '1'] = {t[0], t[1], t[2], t[3]};
            } else if (key == "model.hidden_units") model.hidden_units = std::stoi(val);
            else if (key == "model.dropout1") model.dropout1 = std::stod(val);
            else if (key == "model.dropout2") model.dropout2 = std::stod(val);
            else if (key == "train.batch_size") train.batch_size = std::stoi(val);
            else if (key == "train.max_epochs") train.max_epochs = std::stoi(val);
            else if (key == "train.patience") train.patience = std::stoi(val);
            else if (key == "train.min_delta") train.min_delta = std::stod(val);
            else if (key == "train.lr0") train.lr0 = std::stod(val);
            else if (key == "train.decay_period") train.decay_period = std::stod(val);
            else if (key == "train.decay_rate") train.decay_rate = std::stod(val);
            else if (key == "train.beta1") train.beta1 = std::stod(val);
            else if (key == "train.beta2") train.beta2 = std::stod(val);
            else if (key == "train.adam_eps") train.adam_eps = std::stod(val);
            else if (key == "train.focal_alpha") train.focal.alpha = std::stod(val);
            else if (key == "train.focal_gamma") train.focal.gamma = std::stod(val);
            else if (key == "train.loss") {
                if (val == "focal") train.loss = LossKind::focal;
                else if (val == "ce") train.loss = LossKind::ce;
                else bad("loss must be 'focal' or 'ce'");
            } else if (key == "train.block_mode") {
                if (val == "errc") train.block_mode = BlockMode::errc;
                else if (val == "ir") train.block_mode = BlockMode::inverted_residual_only;
                else bad("block_mode must be 'errc' or 'ir'");
            } else if (key == "data_root") data_root = val;
            else if (key == "out_dir") out_dir = val;
            else if (key == "threshold") threshold = std::stod(val);
            else if (key == "seed") set_seed(std::stoull(val));
            else bad("unknown key '" + key + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            bad("cannot parse value '" + val + "' for key '" + key + "'");
        }
        model.use_errc = train.block_mode == BlockMode::errc;
    }
};

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path);
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        auto strip = [](std::string s) {
            auto sb = s.find_first_not_of(" \t");
            auto se = s.find_last_not_of(" \t");
            return sb == std::string::npos ? std::string() : s.substr(sb, se - sb + 1);
        };
        cfg.apply_line(strip(line.substr(0, eq)), strip(line.substr(eq + 1)), line_no);
    }
    return cfg;
}

} // namespace pinsite

#endif
