// pinsite: train, evaluate and explain the pin-site wound classifier.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "pinsite/pinsite.hpp"

namespace fs = std::filesystem;
using namespace pinsite;

namespace {

RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return RunConfig{};
    return load_run_config(path);
}

void apply_overrides(RunConfig& cfg, const std::string& loss, const std::string& blocks,
                     std::int64_t seed, const std::string& data, const std::string& out) {
    if (loss == "focal") cfg.train.loss = LossKind::focal;
    else if (loss == "ce") cfg.train.loss = LossKind::ce;
    else if (!loss.empty()) throw ConfigError("--loss must be focal or ce");
    if (blocks == "errc") cfg.train.block_mode = BlockMode::errc;
    else if (blocks == "ir") cfg.train.block_mode = BlockMode::inverted_residual_only;
    else if (!blocks.empty()) throw ConfigError("--blocks must be errc or ir");
    cfg.model.use_errc = cfg.train.block_mode == BlockMode::errc;
    if (seed >= 0) cfg.set_seed(static_cast<std::uint64_t>(seed));
    if (!data.empty()) cfg.data_root = data;
    if (!out.empty()) cfg.out_dir = out;
}

int cmd_synth(int n, std::int64_t seed, const std::string& out) {
    auto manifest = generate_synthetic(n, static_cast<std::uint64_t>(seed), out);
    std::cout << "wrote " << manifest.size() << " images under " << out << "\n";
    return 0;
}

int cmd_augment(const std::string& in_dir, const std::string& out_dir, std::int64_t seed) {
    std::vector<std::string> file_errors;
    auto items = load_dataset(in_dir, &file_errors);
    for (const auto& e : file_errors) std::cerr << "warning: " << e << "\n";
    auto expanded = expand_training_set(items, static_cast<std::uint64_t>(seed));
    fs::create_directories(fs::path(out_dir) / "groupA");
    fs::create_directories(fs::path(out_dir) / "groupB");
    for (const auto& li : expanded) {
        const char* sub = li.label == PinLabel::group_a ? "groupA" : "groupB";
        write_png(li.image, (fs::path(out_dir) / sub / (li.id + ".png")).string());
    }
    std::cout << items.size() << " originals -> " << expanded.size() << " images in " << out_dir
              << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& loss, const std::string& blocks,
              std::int64_t seed, const std::string& data, const std::string& out, bool augment) {
    RunConfig cfg = load_config_or_default(config_path);
    apply_overrides(cfg, loss, blocks, seed, data, out);
    std::vector<std::string> file_errors;
    auto items = load_dataset(cfg.data_root, &file_errors);
    for (const auto& e : file_errors) std::cerr << "warning: " << e << "\n";
    DatasetSplit split = split_dataset(items, cfg.train.seed);
    std::cout << "split: train " << split.train.size() << ", val " << split.val.size()
              << ", test " << split.test.size() << "\n";
    if (augment) {
        split.train = expand_training_set(split.train, cfg.train.seed);
        std::cout << "augmented train set: " << split.train.size() << " images\n";
    }
    fs::create_directories(cfg.out_dir);
    write_split_manifest(split, (fs::path(cfg.out_dir) / "split.csv").string());

    PinSiteNet<float> net(cfg.model);
    auto t0 = std::chrono::steady_clock::now();
    TrainReport rep = train_loop(net, split, cfg.train, [](const EpochRow& r) {
        std::cout << "epoch " << r.epoch << " lr " << r.lr << " train_loss " << r.train_loss
                  << " val_loss " << r.val_loss << " val_auc " << r.val_auc << "\n";
        return false;
    });
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_report_csv(rep, (fs::path(cfg.out_dir) / "train_report.csv").string());
    save_checkpoint(net, (fs::path(cfg.out_dir) / "checkpoint.psw").string());
    std::cout << "stopped: " << stop_reason_name(rep.stop_reason) << ", best epoch "
              << rep.best_epoch << ", wall time " << secs << " s\n";
    std::cout << "checkpoint: " << (fs::path(cfg.out_dir) / "checkpoint.psw").string() << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, double threshold,
             const std::string& out_dir) {
    auto net = load_checkpoint<float>(ckpt);
    std::vector<std::string> file_errors;
    auto items = load_dataset(data, &file_errors);
    for (const auto& e : file_errors) std::cerr << "warning: " << e << "\n";

    std::vector<Prediction> preds;
    std::vector<PinLabel> truth;
    std::vector<double> scores_a;
    const int input = net->config().input_size;
    for (const auto& li : items) {
        Tensor<float> batch = make_batch<float>({&li.image}, input);
        Prediction p = predict(*net, batch, threshold)[0];
        preds.push_back(p);
        truth.push_back(li.label);
        scores_a.push_back(p.p_group_a);
    }
    ConfusionMatrix cm = confusion(preds, truth);
    Metrics m = metrics(cm);
    RocResult roc = roc_auc(scores_a, truth);

    std::cout << "confusion (positive = GroupA):\n";
    std::cout << "  tp " << cm.tp << "  fn " << cm.fn << "\n";
    std::cout << "  fp " << cm.fp << "  tn " << cm.tn << "\n";
    std::cout << "metric,value\n";
    std::cout << "precision," << m.precision << "\n";
    std::cout << "recall," << m.recall << "\n";
    std::cout << "f1," << m.f1 << "\n";
    std::cout << "auc," << roc.auc << "\n";
    if (m.degenerate) std::cout << "note: degenerate denominator encountered\n";

    fs::create_directories(out_dir);
    {
        std::ofstream mf(fs::path(out_dir) / "metrics.csv");
        mf << "metric,value\n";
        mf << "precision," << m.precision << "\n";
        mf << "recall," << m.recall << "\n";
        mf << "f1," << m.f1 << "\n";
        mf << "auc," << roc.auc << "\n";
        std::ofstream rf(fs::path(out_dir) / "roc.csv");
        rf << "fpr,tpr,threshold\n";
        for (const auto& p : roc.points)
            rf << p.fpr << "," << p.tpr << "," << p.threshold << "\n";
    }

    // single-image wall-time protocol: 50 warm-up runs, then 1000 timed runs
    Tensor<float> one = make_batch<float>({&items.front().image}, input);
    for (int i = 0; i < 50; ++i) net->forward(one);
    std::vector<double> times;
    times.reserve(1000);
    for (int i = 0; i < 1000; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        net->forward(one);
        times.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count());
    }
    double mean = 0;
    for (double t : times) mean += t;
    mean /= static_cast<double>(times.size());
    double var = 0;
    for (double t : times) var += (t - mean) * (t - mean);
    var /= static_cast<double>(times.size());
    std::cout << "inference time over 1000 runs: " << mean << " +/- " << std::sqrt(var)
              << " ms\n";
    return 0;
}

int cmd_predict(const std::string& ckpt, const std::string& image_path, double threshold) {
    auto net = load_checkpoint<float>(ckpt);
    Image img = read_image(image_path);
    Tensor<float> batch = make_batch<float>({&img}, net->config().input_size);
    Prediction p = predict(*net, batch, threshold)[0];
    std::cout << "label " << label_name(p.label) << "\n";
    std::cout << "p_groupA " << p.p_group_a << "\n";
    std::cout << "p_groupB " << p.p_group_b << "\n";
    return 0;
}

int cmd_explain(const std::string& ckpt, const std::string& image_path,
                const std::string& cls, const std::string& layer, const std::string& out_dir) {
    auto net = load_checkpoint<float>(ckpt);
    Image img = read_image(image_path);
    Tensor<float> batch = make_batch<float>({&img}, net->config().input_size);
    int class_index;
    if (cls == "a") class_index = 0;
    else if (cls == "b") class_index = 1;
    else if (cls.empty()) {
        Prediction p = predict(*net, batch, 0.5)[0];
        class_index = static_cast<int>(p.label);
    } else {
        throw ConfigError("--class must be a or b");
    }
    Heatmap hm = grad_cam(*net, batch, class_index, layer);
    if (hm.all_zero) std::cerr << "warning: heatmap is identically zero\n";
    fs::create_directories(out_dir);
    const std::string stem = fs::path(image_path).stem().string();
    const std::string png = (fs::path(out_dir) / (stem + "_cam.png")).string();
    const std::string csv = (fs::path(out_dir) / (stem + "_cam.csv")).string();
    write_png(render_overlay(img, hm), png);
    write_heatmap_csv(hm, csv);
    std::cout << "wrote " << png << " and " << csv << " (layer " << hm.source_layer << ")\n";
    return 0;
}

int cmd_audit_params(const std::string& config_path) {
    RunConfig cfg = load_config_or_default(config_path);
    PinSiteNet<float> net(cfg.model);
    ParamCount pc = net.count_params();
    std::cout << "name,count\n";
    for (const auto& [name, count] : pc.per_name) std::cout << name << "," << count << "\n";
    std::cout << "total," << pc.total << "\n\n";

    std::cout << "formula evaluations (k=3, a=3):\n";
    std::cout << "config,conv,inverted_residual,errc,conv/errc,ir/errc\n";
    auto row = [](int cin, int cout) {
        const auto conv = param_formula(ParamFormula::conv, 3, 1, cin, cout);
        const auto ir = param_formula(ParamFormula::inverted_residual, 3, 3, cin, cout);
        const auto errc = param_formula(ParamFormula::errc, 3, 3, cin, cout);
        std::cout << cin << "->" << cout << "," << conv << "," << ir << "," << errc << ","
                  << static_cast<double>(conv) / errc << "," << static_cast<double>(ir) / errc
                  << "\n";
    };
    row(128, 256);
    for (const auto& st : cfg.model.stages) row(st.ir_out_channels, st.errc_channels);

    std::cout << "\nper-stage errc actual vs formula (weights only, C_in == C_out):\n";
    for (int i = 0; i < 3; ++i) {
        const int c = cfg.model.stages[i].errc_channels;
        Rng rng(0);
        ErrcBlock<float> block("audit", c, c, rng);
        std::cout << "stage" << i + 1 << " errc actual " << count_actual_params(block).total
                  << " formula " << param_formula(ParamFormula::errc, 3, 3, c, c) << "\n";
    }
    return 0;
}

int cmd_export_embeddings(const std::string& ckpt, const std::string& data,
                          const std::string& out_csv) {
    auto net = load_checkpoint<float>(ckpt);
    std::vector<std::string> file_errors;
    auto items = load_dataset(data, &file_errors);
    for (const auto& e : file_errors) std::cerr << "warning: " << e << "\n";
    std::ofstream out(out_csv);
    if (!out) throw IoError("cannot write " + out_csv);
    out << "id,label";
    for (int j = 1; j <= net->embedding_width(); ++j) out << ",e" << j;
    out << "\n";
    const int input = net->config().input_size;
    for (const auto& li : items) {
        Tensor<float> batch = make_batch<float>({&li.image}, input);
        Tensor<float> emb = extract_embedding(*net, batch);
        out << li.id << "," << label_name(li.label);
        for (int j = 0; j < net->embedding_width(); ++j) out << "," << emb.v[j];
        out << "\n";
    }
    std::cout << "wrote " << items.size() << " embeddings to " << out_csv << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pin-site wound image classifier"};
    app.require_subcommand(1);

    int synth_n = 200;
    std::int64_t synth_seed = 42;
    std::string synth_out = "data";
    auto* synth = app.add_subcommand("synth", "Generate a synthetic pin-site dataset");
    synth->add_option("--n", synth_n, "Images per class")->required();
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--out", synth_out, "Output directory")->required();

    std::string aug_in, aug_out;
    std::int64_t aug_seed = 42;
    auto* aug = app.add_subcommand("augment", "9x-expand a dataset with the 8 transforms");
    aug->add_option("--in", aug_in, "Input dataset root")->required();
    aug->add_option("--out", aug_out, "Output directory")->required();
    aug->add_option("--seed", aug_seed, "RNG seed");

    std::string tr_config, tr_loss, tr_blocks, tr_data, tr_out;
    std::int64_t tr_seed = -1;
    bool tr_no_augment = false;
    auto* tr = app.add_subcommand("train", "Train the classifier");
    tr->add_option("--config", tr_config, "Run config file (key=value)");
    tr->add_option("--loss", tr_loss, "Loss function: focal|ce");
    tr->add_option("--blocks", tr_blocks, "Feature blocks: errc|ir");
    tr->add_option("--seed", tr_seed, "Seed override");
    tr->add_option("--data", tr_data, "Dataset root override");
    tr->add_option("--out", tr_out, "Output directory override");
    tr->add_flag("--no-augment", tr_no_augment, "Skip train-split augmentation");

    std::string ev_ckpt, ev_data, ev_out = ".";
    double ev_threshold = 0.5;
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
    ev->add_option("--data", ev_data, "Dataset root")->required();
    ev->add_option("--threshold", ev_threshold, "Group-B decision threshold");
    ev->add_option("--out", ev_out, "Directory for metrics.csv and roc.csv");

    std::string pr_ckpt, pr_image;
    double pr_threshold = 0.5;
    auto* pr = app.add_subcommand("predict", "Classify a single image");
    pr->add_option("--checkpoint", pr_ckpt, "Checkpoint file")->required();
    pr->add_option("--image", pr_image, "Image file (png/ppm)")->required();
    pr->add_option("--threshold", pr_threshold, "Group-B decision threshold");

    std::string ex_ckpt, ex_image, ex_class, ex_layer, ex_out = ".";
    auto* ex = app.add_subcommand("explain", "Grad-CAM overlay for a single image");
    ex->add_option("--checkpoint", ex_ckpt, "Checkpoint file")->required();
    ex->add_option("--image", ex_image, "Image file")->required();
    ex->add_option("--class", ex_class, "Target class: a|b (default: predicted)");
    ex->add_option("--layer", ex_layer, "Target layer name");
    ex->add_option("--out", ex_out, "Output directory");

    std::string au_config;
    auto* au = app.add_subcommand("audit-params", "Parameter counts and formula values");
    au->add_option("--config", au_config, "Run config file");

    std::string em_ckpt, em_data, em_out;
    auto* em = app.add_subcommand("export-embeddings", "Export penultimate-layer embeddings");
    em->add_option("--checkpoint", em_ckpt, "Checkpoint file")->required();
    em->add_option("--data", em_data, "Dataset root")->required();
    em->add_option("--out", em_out, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return cmd_synth(synth_n, synth_seed, synth_out);
        if (aug->parsed()) return cmd_augment(aug_in, aug_out, aug_seed);
        if (tr->parsed())
            return cmd_train(tr_config, tr_loss, tr_blocks, tr_seed, tr_data, tr_out,
                             !tr_no_augment);
        if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_threshold, ev_out);
        if (pr->parsed()) return cmd_predict(pr_ckpt, pr_image, pr_threshold);
        if (ex->parsed()) return cmd_explain(ex_ckpt, ex_image, ex_class, ex_layer, ex_out);
        if (au->parsed()) return cmd_audit_params(au_config);
        if (em->parsed()) return cmd_export_embeddings(em_ckpt, em_data, em_out);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
