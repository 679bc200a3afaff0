#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>

#include "expc/dataset.hpp"
#include "expc/model_io.hpp"
#include "expc/synth.hpp"
#include "expc/training.hpp"

namespace expc::cli {

namespace {

// Flag combinations that parse but make no sense; reported as exit 2.
class FlagError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

ModelConfig build_config(const std::string& arch, std::size_t input_size, const std::vector<std::size_t>& widths) {
    if (input_size == 0) throw FlagError("--input-size must be positive");
    ModelConfig c = arch == "conv" ? ModelConfig::conv(input_size, widths) : ModelConfig::dense(input_size, widths);
    try {
        c.validate();
    } catch (const UsageError& e) {
        throw FlagError(e.what());
    }
    return c;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f << text;
    if (!f) throw IoError("short write to " + path);
}

}  // namespace

int run_gradcheck(std::uint64_t seed, std::optional<Variant> arch, std::ostream& out, const GradientTamper& tamper) {
    std::vector<GradCheckReport> reports;
    reports.push_back(layer_gradient_checks(seed));
    if (!arch || *arch == Variant::Conv)
        reports.push_back(gradient_check(tiny_conv_config(), seed, kGradCheckTolerance, tamper));
    if (!arch || *arch == Variant::Dense)
        reports.push_back(gradient_check(tiny_dense_config(), seed, kGradCheckTolerance, tamper));

    bool ok = true;
    char line[256];
    for (const auto& r : reports) {
        for (const auto& l : r.layers) {
            std::snprintf(line, sizeof line, "%s\t%s\t%zu\t%.3e\t%s\n", r.subject.c_str(), l.name.c_str(), l.checked,
                          l.max_rel_error, l.passed(r.tolerance) ? "ok" : "FAIL");
            out << line;
            if (!l.passed(r.tolerance)) {
                out << "  offending coordinates:";
                for (std::size_t i = 0; i < l.offending.size() && i < 16; ++i) out << ' ' << l.offending[i];
                if (l.offending.size() > 16) out << " ...";
                out << '\n';
            }
        }
        ok = ok && r.passed();
    }
    out << (ok ? "gradient check passed" : "gradient check FAILED") << " (tolerance " << kGradCheckTolerance << ")\n";
    return ok ? kExitOk : kExitRuntime;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exposure-distortion CNN classifier: data generation, training, evaluation and checks", "expc"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic pristine/exposure-shifted PPM dataset");
    std::string gen_out;
    std::size_t gen_count = 0, gen_size = 128;
    std::uint64_t gen_seed = 0;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--count", gen_count, "Images per class")->required()->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
    gen->add_option("--size", gen_size, "Square image side")->capture_default_str()->check(CLI::Range(8, 4096));

    // train
    auto* tr = app.add_subcommand("train", "Train a classifier on a directory of pri.*/exp.* PPM files");
    std::string tr_data, tr_arch = "conv", tr_out, tr_report;
    std::size_t tr_input = 128;
    std::vector<std::size_t> tr_channels;
    TrainConfig tc;
    tr->add_option("--data", tr_data, "Image directory")->required();
    tr->add_option("--arch", tr_arch, "conv or dense")->capture_default_str()->check(CLI::IsMember({"conv", "dense"}));
    tr->add_option("--input-size", tr_input, "Square input side")->capture_default_str();
    tr->add_option("--channels", tr_channels, "Conv channels (conv) or hidden widths (dense), comma separated")
        ->delimiter(',');
    tr->add_option("--epochs", tc.epochs, "Epochs")->capture_default_str()->check(CLI::PositiveNumber);
    tr->add_option("--batch", tc.batch_size, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
    tr->add_option("--lr", tc.learning_rate, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    tr->add_option("--split", tc.train_fraction, "Train fraction in (0,1)")->capture_default_str();
    tr->add_option("--seed", tc.seed, "Seed for init, split and shuffling")->capture_default_str();
    tr->add_option("--out", tr_out, "Model file to write")->required();
    tr->add_option("--report", tr_report, "TSV report file to write");

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate a saved model on a directory");
    std::string ev_model, ev_data;
    ev->add_option("--model", ev_model, "Model file")->required();
    ev->add_option("--data", ev_data, "Image directory")->required();

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
    std::uint64_t gc_seed = 0;
    std::string gc_arch;
    gc->add_option("--seed", gc_seed, "Seed")->capture_default_str();
    gc->add_option("--arch", gc_arch, "Only this variant (conv or dense)")->check(CLI::IsMember({"conv", "dense"}));

    // params
    auto* pc = app.add_subcommand("params", "Count learnable parameters of an architecture");
    std::string pc_arch = "conv";
    std::size_t pc_input = 128;
    std::vector<std::size_t> pc_channels, pc_hidden;
    pc->add_option("--arch", pc_arch, "conv or dense")->capture_default_str()->check(CLI::IsMember({"conv", "dense"}));
    pc->add_option("--input-size", pc_input, "Square input side")->capture_default_str();
    auto* pc_ch = pc->add_option("--channels", pc_channels, "Conv channels")->delimiter(',');
    auto* pc_hd = pc->add_option("--hidden", pc_hidden, "Dense hidden widths")->delimiter(',');
    pc_ch->excludes(pc_hd);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kExitUsage;
    }

    try {
        if (*gen) {
            const auto rows = synth_generate(gen_out, gen_count, gen_seed, gen_size);
            out << "wrote " << rows.size() << " images and manifest.tsv to " << gen_out << "\n";
            return kExitOk;
        }
        if (*tr) {
            if (tr_channels.empty())
                tr_channels = tr_arch == "conv" ? std::vector<std::size_t>{768, 384} : std::vector<std::size_t>{768};
            const ModelConfig mc = build_config(tr_arch, tr_input, tr_channels);
            try {
                tc.validate();
            } catch (const UsageError& e) {
                throw FlagError(e.what());
            }
            const Dataset data = load_directory(tr_data, tr_input);
            const auto result = train<float>(mc, tc, data);
            save_model(tr_out, mc, result.params);
            const std::string tsv = format_report_tsv(result.report);
            if (!tr_report.empty()) write_text(tr_report, tsv);
            out << "arch " << to_string(mc.variant) << " [" << join(tr_arch == "conv" ? mc.conv_channels : mc.dense_hidden)
                << "] input " << mc.input_h << "x" << mc.input_w << "x" << mc.input_c << ", " << result.report.param_count
                << " parameters\n";
            out << "split " << result.report.train_size << " train / " << result.report.test_size << " test\n";
            out << tsv;
            return kExitOk;
        }
        if (*ev) {
            const auto model = load_model(ev_model);
            const Dataset data = load_directory(ev_data, model.config.input_h);
            const auto r = evaluate(model.config, model.params, data);
            out << fixed4(r.loss) << '\t' << fixed4(r.accuracy) << '\n';
            return kExitOk;
        }
        if (*gc) {
            std::optional<Variant> arch;
            if (!gc_arch.empty()) arch = parse_variant(gc_arch);
            return run_gradcheck(gc_seed, arch, out);
        }
        if (*pc) {
            if (pc_arch == "conv" && pc_hd->count() > 0) throw FlagError("--hidden applies to the dense architecture");
            if (pc_arch == "dense" && pc_ch->count() > 0) throw FlagError("--channels applies to the conv architecture");
            std::vector<std::size_t> widths = pc_arch == "conv" ? pc_channels : pc_hidden;
            const bool given = pc_arch == "conv" ? pc_ch->count() > 0 : pc_hd->count() > 0;
            if (!given) widths = pc_arch == "conv" ? std::vector<std::size_t>{768, 384} : std::vector<std::size_t>{768};
            const ModelConfig mc = build_config(pc_arch, pc_input, widths);
            out << "arch\t" << to_string(mc.variant) << " [" << join(widths) << "]\n";
            out << "input\t" << mc.input_h << "x" << mc.input_w << "x" << mc.input_c << "\n";
            for (const auto& s : layer_specs(mc))
                out << "layer\t" << s.name << "\t" << s.weights.count() + s.bias.count() << "\n";
            out << "params\t" << param_count(mc) << "\n";
            out << "reference\tAlexNet\t" << kAlexNetParams << "\n";
            out << "reference\tResNet50\t" << kResNet50Params << "\n";
            return kExitOk;
        }
    } catch (const FlagError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace expc::cli
