// ecgforge: batch pipeline driver. Subcommands cover every pipeline stage:
// extract / render / guide / generate / judge / report / bench-metrics /
// fuse-check, plus synth for building fixture corpora.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecgforge/features.hpp"
#include "ecgforge/fusion.hpp"
#include "ecgforge/guider.hpp"
#include "ecgforge/judge.hpp"
#include "ecgforge/llm_client.hpp"
#include "ecgforge/metrics.hpp"
#include "ecgforge/render.hpp"
#include "ecgforge/signal_io.hpp"
#include "ecgforge/synth.hpp"

namespace fs = std::filesystem;
using namespace ecgforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitUpstream = 3;

struct PipelineConfig {
    fs::path input;
    fs::path out;
    std::uint64_t seed = 0;
    int concurrency = 4;
    size_t max_beats = 0;
    std::string endpoint;
    std::string model = "gpt-4o";
    std::string judge_model = "gpt-4o";
    bool dry_run = false;
    fs::path predictions;
    fs::path references;
    fs::path truth_csv;
    fs::path scores_csv;
    double threshold = 0.5;
    int count = 10;  // synth
    std::string layout = "grid";
};

void apply_config_file(PipelineConfig& cfg, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config " + path.string());
    nlohmann::json j;
    in >> j;
    if (j.contains("input")) cfg.input = j["input"].get<std::string>();
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("concurrency")) cfg.concurrency = j["concurrency"].get<int>();
    if (j.contains("max_beats")) cfg.max_beats = j["max_beats"].get<size_t>();
    if (j.contains("endpoint")) cfg.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("model")) cfg.model = j["model"].get<std::string>();
    if (j.contains("judge_model")) cfg.judge_model = j["judge_model"].get<std::string>();
    if (j.contains("layout")) cfg.layout = j["layout"].get<std::string>();
    if (j.contains("threshold")) cfg.threshold = j["threshold"].get<double>();
}

std::vector<fs::path> list_record_csvs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InvalidArgument("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".csv") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

EndpointConfig make_endpoint(const PipelineConfig& cfg) {
    EndpointConfig ep = EndpointConfig::from_environment();
    if (!cfg.endpoint.empty()) ep.base_url = cfg.endpoint;
    if (!cfg.out.empty()) ep.cache_dir = cfg.out / "cache";
    return ep;
}

/// Runs fn(i) for i in [0, n) on a bounded worker pool. The first
/// exception stops dispatch and is rethrown on the calling thread.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const int count = std::max(1, workers);
    for (int w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;  // stop handing out work
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

RenderStyle make_style(const PipelineConfig& cfg) {
    RenderStyle style;
    style.layout = cfg.layout == "stacked" ? Layout::stacked_12 : Layout::grid_3x4_plus_rhythm;
    return style;
}

int cmd_extract(const PipelineConfig& cfg) {
    const auto files = list_record_csvs(cfg.input);
    if (cfg.dry_run) {
        std::cout << "extract: " << files.size() << " records -> " << cfg.out << "\n";
        return kExitOk;
    }
    fs::create_directories(cfg.out);
    std::atomic<int> quarantined{0};
    std::mutex log_mutex;
    parallel_for(files.size(), cfg.concurrency, [&](size_t i) {
        try {
            const EcgRecord record = load_record(files[i]);
            const FeatureSequences features = extract_features(record);
            std::ofstream out(cfg.out / (record.record_id + ".features.json"), std::ios::binary);
            out << features.to_json() << "\n";
        } catch (const Error& e) {
            ++quarantined;
            std::lock_guard<std::mutex> lock(log_mutex);
            std::cerr << "quarantined " << files[i].filename().string() << ": " << e.what() << "\n";
        }
    });
    std::cout << "extract: " << files.size() - quarantined << " ok, " << quarantined
              << " quarantined\n";
    return kExitOk;
}

int cmd_render(const PipelineConfig& cfg) {
    const auto files = list_record_csvs(cfg.input);
    if (cfg.dry_run) {
        std::cout << "render: " << files.size() << " records -> " << cfg.out << "\n";
        return kExitOk;
    }
    fs::create_directories(cfg.out);
    const RenderStyle style = make_style(cfg);
    std::atomic<int> quarantined{0};
    std::mutex log_mutex;
    parallel_for(files.size(), cfg.concurrency, [&](size_t i) {
        try {
            const EcgRecord record = load_record(files[i]);
            render_12lead(record, style, cfg.out / (record.record_id + ".png"));
        } catch (const Error& e) {
            ++quarantined;
            std::lock_guard<std::mutex> lock(log_mutex);
            std::cerr << "quarantined " << files[i].filename().string() << ": " << e.what() << "\n";
        }
    });
    std::cout << "render: " << files.size() - quarantined << " ok, " << quarantined
              << " quarantined\n";
    return kExitOk;
}

int cmd_guide(const PipelineConfig& cfg) {
    const auto files = list_record_csvs(cfg.input);
    if (cfg.dry_run) {
        std::cout << "guide: " << files.size() << " records -> " << cfg.out << "\n";
        return kExitOk;
    }
    fs::create_directories(cfg.out);
    std::atomic<int> quarantined{0};
    std::mutex log_mutex;
    parallel_for(files.size(), cfg.concurrency, [&](size_t i) {
        try {
            const EcgRecord record = load_record(files[i]);
            if (!record.report_text) throw MissingReport(record.record_id + ": no report");
            const FeatureSequences features = extract_features(record);
            const GuiderPrompt prompt = build_guider_prompt(
                *record.report_text, serialize_measurements(features, cfg.max_beats));
            std::ofstream out(cfg.out / (record.record_id + ".prompt.txt"), std::ios::binary);
            out << prompt.rendered;
        } catch (const Error& e) {
            ++quarantined;
            std::lock_guard<std::mutex> lock(log_mutex);
            std::cerr << "quarantined " << files[i].filename().string() << ": " << e.what() << "\n";
        }
    });
    std::cout << "guide: " << files.size() - quarantined << " ok, " << quarantined
              << " quarantined\n";
    return kExitOk;
}

int cmd_generate(const PipelineConfig& cfg) {
    const auto files = list_record_csvs(cfg.input);
    if (cfg.dry_run) {
        std::cout << "generate: " << files.size() << " records via " << cfg.endpoint << " -> "
                  << cfg.out << "\n";
        return kExitOk;
    }
    fs::create_directories(cfg.out);
    LlmClient client(make_endpoint(cfg));
    GenerationOptions options;
    options.model_name = cfg.model;
    options.seed = cfg.seed;
    options.max_beats = cfg.max_beats;

    std::vector<std::optional<InstructionPair>> slots(files.size());
    std::vector<std::string> quarantine;
    std::mutex quarantine_mutex;
    parallel_for(files.size(), cfg.concurrency, [&](size_t i) {
        try {
            const EcgRecord record = load_record(files[i]);
            const FeatureSequences features = extract_features(record);
            const std::string image = record.record_id + ".png";
            slots[i] = generate_instruction_pair(record, features, image, client, options);
        } catch (const UpstreamUnavailable&) {
            throw;  // fatal: exit 3 below
        } catch (const Error& e) {
            std::lock_guard<std::mutex> lock(quarantine_mutex);
            quarantine.push_back(files[i].stem().string() + ": " + e.what());
        }
    });

    std::vector<InstructionPair> pairs;
    for (auto& slot : slots) {
        if (slot) pairs.push_back(std::move(*slot));
    }
    write_dataset(pairs, cfg.out / "dataset.jsonl");
    if (!quarantine.empty()) {
        std::ofstream q(cfg.out / "quarantine.txt", std::ios::binary);
        for (const auto& line : quarantine) q << line << "\n";
    }
    std::cout << "generate: " << pairs.size() << " pairs, " << quarantine.size()
              << " quarantined, " << client.network_calls() << " network calls\n";
    return kExitOk;
}

int cmd_judge(const PipelineConfig& cfg) {
    std::map<std::string, std::string> generated, groundtruth;
    auto load_jsonl = [](const fs::path& path, const char* key,
                         std::map<std::string, std::string>& out) {
        std::ifstream in(path);
        if (!in) throw InvalidArgument("cannot open " + path.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            out[j.at("id").get<std::string>()] = j.at(key).get<std::string>();
        }
    };
    load_jsonl(cfg.predictions, "generated", generated);
    load_jsonl(cfg.references, "groundtruth", groundtruth);
    if (cfg.dry_run) {
        std::cout << "judge: " << generated.size() << " predictions -> " << cfg.out << "\n";
        return kExitOk;
    }
    fs::create_directories(cfg.out);
    LlmClient client(make_endpoint(cfg));

    std::vector<std::pair<std::string, std::string>> items(generated.begin(), generated.end());
    std::vector<std::optional<std::string>> cards(items.size());
    std::vector<std::string> quarantine;
    std::mutex quarantine_mutex;
    parallel_for(items.size(), cfg.concurrency, [&](size_t i) {
        const auto& [id, text] = items[i];
        auto ref = groundtruth.find(id);
        if (ref == groundtruth.end()) {
            std::lock_guard<std::mutex> lock(quarantine_mutex);
            quarantine.push_back(id + ": no reference");
            return;
        }
        try {
            ChatRequest request;
            request.model_name = cfg.judge_model;
            request.temperature = 0.0;
            request.messages = {{"user", build_judge_prompt(text, ref->second)}};
            const std::string raw = client.complete_chat(request);
            parse_scorecard(raw);  // validate before persisting
            nlohmann::ordered_json j;
            j["id"] = id;
            j["scorecard"] = nlohmann::json::parse(raw.substr(raw.find('{')));
            cards[i] = j.dump();
        } catch (const UpstreamUnavailable&) {
            throw;
        } catch (const Error& e) {
            std::lock_guard<std::mutex> lock(quarantine_mutex);
            quarantine.push_back(id + ": " + e.what());
        }
    });

    std::ofstream out(cfg.out / "scorecards.jsonl", std::ios::binary);
    size_t written = 0;
    for (const auto& card : cards) {
        if (card) {
            out << *card << "\n";
            ++written;
        }
    }
    if (!quarantine.empty()) {
        std::ofstream q(cfg.out / "quarantine.txt", std::ios::binary);
        for (const auto& line : quarantine) q << line << "\n";
    }
    std::cout << "judge: " << written << " scorecards, " << quarantine.size() << " quarantined\n";
    return kExitOk;
}

int cmd_report(const PipelineConfig& cfg) {
    std::ifstream in(cfg.input);
    if (!in) throw InvalidArgument("cannot open " + cfg.input.string());
    std::vector<JudgeScorecard> cards;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        cards.push_back(parse_scorecard(j.at("scorecard").dump()));
    }
    const MetricReport report = aggregate_metrics(cards);
    if (cfg.dry_run) {
        std::cout << "report: " << cards.size() << " scorecards -> " << cfg.out << "\n";
        return kExitOk;
    }
    fs::create_directories(cfg.out);
    std::ofstream metrics(cfg.out / "metrics.json", std::ios::binary);
    metrics << metric_report_json(report) << "\n";
    const std::string table = render_report_table({{"evaluated", report}});
    std::ofstream table_out(cfg.out / "table.txt", std::ios::binary);
    table_out << table;
    std::cout << table;
    return kExitOk;
}

Eigen::MatrixXd load_matrix_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidArgument(path.string() + " is empty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw MalformedInput("ragged CSV " + path.string());
        for (size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

int cmd_bench_metrics(const PipelineConfig& cfg) {
    const Eigen::MatrixXd y_true = load_matrix_csv(cfg.truth_csv);
    const Eigen::MatrixXd y_score = load_matrix_csv(cfg.scores_csv);
    const MultilabelMetrics m = compute_multilabel_metrics(y_true, y_score, cfg.threshold);
    nlohmann::ordered_json j;
    j["auc_macro"] = m.auc_macro;
    j["f1_macro"] = m.f1_macro;
    j["hamming_loss"] = m.hamming_loss;
    j["skipped_labels"] = m.skipped_labels;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_fuse_check(const PipelineConfig& cfg) {
    const Eigen::Index n_s = 64, d_s = 16, n_m = 576, d_m = 12, n_text = 32, d_t = 10, vocab = 16;
    FusionParams params;
    params.ts_projector = Mlp::random(d_s, d_m, d_m, cfg.seed + 1);
    params.shared_projector = Mlp::random(d_m, d_t, d_t, cfg.seed + 2);
    std::mt19937_64 rng(cfg.seed + 3);
    std::normal_distribution<double> gauss(0.0, 0.3);
    params.head = Eigen::MatrixXd::Zero(d_t, vocab);
    for (Eigen::Index i = 0; i < d_t; ++i)
        for (Eigen::Index j = 0; j < vocab; ++j) params.head(i, j) = gauss(rng);

    auto random_matrix = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = gauss(rng);
        return m;
    };
    const Eigen::MatrixXd e_ts = random_matrix(n_s, d_s);
    const Eigen::MatrixXd e_img = random_matrix(n_m, d_m);
    const Eigen::MatrixXd text = random_matrix(n_text, d_t);

    const Eigen::MatrixXd fused = project_and_fuse(e_ts, e_img, text, params);
    std::cout << "stage            rows  dim\n";
    std::cout << "time-series      " << n_s << "    " << d_s << " -> " << d_m << " -> " << d_t
              << "\n";
    std::cout << "image            " << n_m << "   " << d_m << " -> " << d_t << "\n";
    std::cout << "text             " << n_text << "    " << d_t << "\n";
    std::cout << "fused            " << fused.rows() << "  " << fused.cols() << "\n";
    bool ok = fused.rows() == n_s + n_m + n_text && fused.cols() == d_t;

    // Smaller instance for the finite-difference sweep.
    FusionParams small;
    small.ts_projector = Mlp::random(5, 4, 4, cfg.seed + 10);
    small.shared_projector = Mlp::random(4, 6, 6, cfg.seed + 11);
    small.head = random_matrix(6, 8);
    const double err = grad_check(small, random_matrix(3, 5), random_matrix(4, 4),
                                  random_matrix(2, 6), {1, 5}, 1e-5);
    std::cout << "gradient check max relative error: " << err << "\n";
    ok = ok && err < 1e-4;

    const auto trace = train_toy(cfg.seed);
    bool decreasing = true;
    for (size_t i = 1; i < trace.size(); ++i) decreasing = decreasing && trace[i] < trace[i - 1];
    std::cout << "toy training loss " << trace.front() << " -> " << trace.back()
              << (decreasing ? " (monotone)" : " (NOT monotone)") << "\n";
    ok = ok && decreasing;

    std::cout << (ok ? "fuse-check: PASS" : "fuse-check: FAIL") << "\n";
    return ok ? kExitOk : 1;
}

int cmd_synth(const PipelineConfig& cfg) {
    if (cfg.dry_run) {
        std::cout << "synth: " << cfg.count << " records -> " << cfg.out << "\n";
        return kExitOk;
    }
    fs::create_directories(cfg.out);
    for (int i = 0; i < cfg.count; ++i) {
        SynthConfig sc;
        sc.seed = cfg.seed + static_cast<std::uint64_t>(i);
        sc.snr_db = 25.0;
        char id[32];
        std::snprintf(id, sizeof(id), "synth%04d", i);
        auto [record, truth] = make_synthetic_record(sc, id);
        record.report_text = "Sinus rhythm. Normal ECG.";
        write_record(record, cfg.out / (std::string(id) + ".csv"));
    }
    std::cout << "synth: wrote " << cfg.count << " records\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ECG grounding data pipeline"};
    app.require_subcommand(1);

    PipelineConfig cfg;
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--input", cfg.input, "input directory or file");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--seed", cfg.seed, "RNG seed");
        sub->add_option("--concurrency", cfg.concurrency, "worker pool size")
            ->check(CLI::PositiveNumber);
        sub->add_option("--max-beats", cfg.max_beats, "cap serialized beats per lead (0 = all)");
        sub->add_option("--endpoint", cfg.endpoint, "chat-completion base URL");
        sub->add_option("--model", cfg.model, "generation model name");
        sub->add_option("--judge-model", cfg.judge_model, "judge model name");
        sub->add_flag("--dry-run", cfg.dry_run, "print the plan, do nothing");
        return sub;
    };

    auto* extract = add_common(app.add_subcommand("extract", "records -> features.json"));
    auto* render = add_common(app.add_subcommand("render", "records -> 12-lead PNGs"));
    render->add_option("--layout", cfg.layout, "grid | stacked");
    auto* guide = add_common(app.add_subcommand("guide", "records -> guider prompts"));
    auto* generate = add_common(app.add_subcommand("generate", "records -> instruction JSONL"));
    auto* judge = add_common(app.add_subcommand("judge", "predictions -> scorecards"));
    judge->add_option("--predictions", cfg.predictions, "JSONL with {id, generated}")->required();
    judge->add_option("--references", cfg.references, "JSONL with {id, groundtruth}")->required();
    auto* report = add_common(app.add_subcommand("report", "scorecards -> metrics + table"));
    auto* bench = add_common(app.add_subcommand("bench-metrics", "label files -> AUC/F1/HL"));
    bench->add_option("--truth", cfg.truth_csv, "binary label CSV")->required();
    bench->add_option("--scores", cfg.scores_csv, "score CSV")->required();
    bench->add_option("--threshold", cfg.threshold, "decision threshold");
    auto* fuse = add_common(app.add_subcommand("fuse-check", "fusion math self-check"));
    auto* synth = add_common(app.add_subcommand("synth", "write synthetic fixture records"));
    synth->add_option("--count", cfg.count, "number of records");

    try {
        app.parse(argc, argv);
        if (!config_path.empty()) {
            PipelineConfig from_file;
            apply_config_file(from_file, config_path);
            // flags override file values; reparse on top of file defaults
            std::swap(cfg, from_file);
            app.clear();
            app.parse(argc, argv);
            if (cfg.input.empty()) cfg.input = from_file.input;
            if (cfg.out.empty()) cfg.out = from_file.out;
            if (cfg.endpoint.empty()) cfg.endpoint = from_file.endpoint;
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (extract->parsed()) return cmd_extract(cfg);
        if (render->parsed()) return cmd_render(cfg);
        if (guide->parsed()) return cmd_guide(cfg);
        if (generate->parsed()) return cmd_generate(cfg);
        if (judge->parsed()) return cmd_judge(cfg);
        if (report->parsed()) return cmd_report(cfg);
        if (bench->parsed()) return cmd_bench_metrics(cfg);
        if (fuse->parsed()) return cmd_fuse_check(cfg);
        if (synth->parsed()) return cmd_synth(cfg);
    } catch (const UpstreamUnavailable& e) {
        std::cerr << "upstream unavailable: " << e.what() << "\n";
        return kExitUpstream;
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
