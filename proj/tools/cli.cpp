#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include <CLI11.hpp>

#include "vse/error.hpp"
#include "vse/eval.hpp"
#include "vse/fvb.hpp"
#include "vse/gallery.hpp"
#include "vse/index.hpp"
#include "vse/parallel.hpp"

namespace vse::cli {

namespace fs = std::filesystem;

EmbeddingSet parse_csv(std::string_view text) {
    std::vector<float> values;
    std::size_t dim = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        std::size_t cols = 0;
        std::size_t pos = 0;
        while (true) {
            auto comma = line.find(',', pos);
            auto cell = line.substr(pos, comma == std::string_view::npos
                                                 ? std::string_view::npos
                                                 : comma - pos);
            const auto b = cell.find_first_not_of(" \t\r");
            const auto e = cell.find_last_not_of(" \t\r");
            cell = b == std::string_view::npos ? std::string_view{}
                                               : cell.substr(b, e - b + 1);
            if (!cell.empty() && cell.front() == '+') {
                cell.remove_prefix(1);
            }
            float v = 0.0F;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
                throw DataError(
                        "line " + std::to_string(line_no) + ", column " +
                        std::to_string(cols + 1) + ": '" + std::string(cell) +
                        "' is not a number");
            }
            if (!std::isfinite(v)) {
                throw DataError(
                        "line " + std::to_string(line_no) + ", column " +
                        std::to_string(cols + 1) + ": non-finite value");
            }
            values.push_back(v);
            ++cols;
            if (comma == std::string_view::npos) {
                break;
            }
            pos = comma + 1;
        }
        if (rows == 0) {
            dim = cols;
        } else if (cols != dim) {
            throw DataError(
                    "line " + std::to_string(line_no) + " has " +
                    std::to_string(cols) + " values, expected " +
                    std::to_string(dim));
        }
        ++rows;
    }
    if (rows == 0) {
        throw DataError("CSV input has no rows");
    }
    return EmbeddingSet(dim, std::move(values), index_labels(rows));
}

std::string to_csv(const EmbeddingSet& set) {
    std::string out;
    char buf[32];
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto row = set.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j > 0) {
                out += ',';
            }
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), row[j]);
            out.append(buf, ptr);
        }
        out += '\n';
    }
    return out;
}

namespace {

bool is_fvb(const fs::path& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) {
        throw DataError("cannot open " + path.string());
    }
    char magic[4] = {};
    const auto n = std::fread(magic, 1, 4, f);
    std::fclose(f);
    return n == 4 && std::equal(magic, magic + 4, kFvbMagic);
}

std::optional<fs::path> opt_path(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    return fs::path(s);
}

std::vector<std::string> read_label_file(const fs::path& path) {
    auto bytes = read_file(path);
    return decode_labels(std::string_view(
            reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void emit(const std::string& target, const std::string& text, std::ostream& out) {
    if (target.empty() || target == "-") {
        out << text;
    } else {
        write_file_atomic(target, text);
    }
}

std::vector<std::size_t> parse_size_list(const std::string& s, const char* what) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size() ||
            v == 0) {
            throw InvalidArgument(
                    std::string("bad ") + what + " list entry '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

struct GlobalOptions {
    int threads = 0;
};

void apply_threads(const GlobalOptions& g) {
    int n = g.threads;
    if (n <= 0) {
        if (const char* env = std::getenv("VSE_THREADS")) {
            n = std::atoi(env);
        }
    }
    set_num_threads(n);
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
    CLI::App app{"Vector similarity search for face embedding galleries", "vse"};
    app.require_subcommand(1);
    GlobalOptions global;
    app.add_option("--threads", global.threads,
                   "Worker threads (default: VSE_THREADS or all cores)");

    // ingest
    std::string in_path, labels_path, out_path, out_labels;
    bool normalize = true;
    auto* ingest = app.add_subcommand("ingest", "CSV or FVB -> FVB");
    ingest->add_option("--input", in_path, "CSV or FVB input")->required();
    ingest->add_option("--labels", labels_path, "Labels file, one per line");
    ingest->add_option("--output", out_path, "FVB output")->required();
    ingest->add_option("--output-labels", out_labels,
                       "Labels output (default <output>.labels)");
    ingest->add_flag("--normalize,!--no-normalize", normalize,
                     "L2-normalize rows (default on)");

    // export
    auto* exp = app.add_subcommand("export", "FVB -> CSV");
    exp->add_option("--input", in_path, "FVB input")->required();
    exp->add_option("--output", out_path, "CSV output ('-' for stdout)");

    // build
    std::string kind_name = "flat";
    std::size_t nlist = 0;
    std::size_t m = 16;
    std::optional<std::uint64_t> seed;
    std::size_t max_iters = kDefaultKMeansIters;
    auto* build = app.add_subcommand("build", "Build an index from an FVB gallery");
    build->add_option("--input", in_path, "Gallery FVB")->required();
    build->add_option("--labels", labels_path, "Gallery labels");
    build->add_option("--kind", kind_name, "flat | ivf-flat | ivf-pq")
            ->check(CLI::IsMember({"flat", "ivf-flat", "ivf-pq"}));
    build->add_option("--nlist", nlist, "Coarse centroids (ivf kinds)");
    build->add_option("--m", m, "PQ subquantizers (ivf-pq)");
    build->add_option("--seed", seed, "Training seed (required for ivf kinds)");
    build->add_option("--max-iters", max_iters, "k-means iterations");
    build->add_option("--output", out_path, "VIDX output")->required();

    // search
    std::string index_path, queries_path;
    std::size_t k = 10;
    std::size_t nprobe = 0;
    auto* search = app.add_subcommand("search", "k-NN search, TSV output");
    search->add_option("--index", index_path, "VIDX index")->required();
    search->add_option("--queries", queries_path, "Query FVB")->required();
    search->add_option("--k", k, "Neighbors per query");
    search->add_option("--nprobe", nprobe, "Lists to scan (default nlist/32)");
    search->add_option("--output", out_path, "TSV output ('-' for stdout)");

    // clean
    std::string reports_path;
    auto* clean = app.add_subcommand("clean", "Drop per-identity outliers");
    clean->add_option("--input", in_path, "Gallery FVB")->required();
    clean->add_option("--labels", labels_path, "Gallery labels");
    clean->add_option("--output", out_path, "Cleaned FVB")->required();
    clean->add_option("--output-labels", out_labels, "Cleaned labels");
    clean->add_option("--reports", reports_path, "JSON-lines reports")->required();
    clean->add_option("--seed", seed, "2-means seed")->required();
    clean->add_option("--max-iters", max_iters, "k-means iterations");

    // fuse
    std::string second_path, strategy_name = "sum";
    auto* fuse_cmd = app.add_subcommand("fuse", "Fuse original/mirrored features");
    fuse_cmd->add_option("--input", in_path, "FVB; rows i and i+N/2 are paired "
                                             "unless --second is given")
            ->required();
    fuse_cmd->add_option("--labels", labels_path, "Labels of --input");
    fuse_cmd->add_option("--second", second_path, "FVB of mirrored features");
    fuse_cmd->add_option("--strategy", strategy_name,
                         "single | concat | sort | prod | sum | max");
    fuse_cmd->add_option("--output", out_path, "Fused FVB")->required();
    fuse_cmd->add_option("--output-labels", out_labels, "Fused labels");
    fuse_cmd->add_flag("--normalize,!--no-normalize", normalize,
                       "L2-normalize fused rows (default on)");

    // split
    SplitSpec split_spec;
    std::string gallery_out, probes_out;
    auto* split = app.add_subcommand("split", "Make a gallery/probe split");
    split->add_option("--input", in_path, "Source FVB")->required();
    split->add_option("--labels", labels_path, "Source labels");
    split->add_option("--identities", split_spec.n_identities, "Probe identities");
    split->add_option("--fraction", split_spec.in_gallery_fraction,
                      "Fraction of probe identities kept in the gallery");
    split->add_option("--probes-per-identity", split_spec.probes_per_identity);
    split->add_option("--seed", seed, "Split seed")->required();
    split->add_option("--gallery-out", gallery_out, "Gallery FVB")->required();
    split->add_option("--probes-out", probes_out, "Probe FVB")->required();

    // eval
    std::optional<double> threshold;
    std::string json_path, tsv_path;
    std::size_t repetitions = 3;
    auto* eval = app.add_subcommand("eval", "Top-1 accuracy of an index");
    eval->add_option("--index", index_path, "VIDX index")->required();
    eval->add_option("--probes", queries_path, "Probe FVB")->required();
    eval->add_option("--labels", labels_path, "Probe labels (truth)");
    eval->add_option("--nprobe", nprobe, "Lists to scan (default nlist/32)");
    eval->add_option("--threshold", threshold, "Reject matches farther than this");
    eval->add_option("--repetitions", repetitions, "Timed repetitions (median)");
    eval->add_option("--json", json_path, "JSON report output");
    eval->add_option("--tsv", tsv_path, "TSV report output ('-' for stdout)");

    // bench
    std::string gallery_path, nlists_arg = "64,256", nprobes_arg = "1,8,32";
    SyntheticSpec synth;
    auto* bench = app.add_subcommand("bench", "Accuracy/time matrix over strategies");
    bench->add_option("--gallery", gallery_path, "Gallery FVB (default: synthetic)");
    bench->add_option("--probes", queries_path, "Probe FVB, labels are the truth");
    bench->add_option("--nlist", nlists_arg, "Comma-separated nlist values");
    bench->add_option("--nprobe", nprobes_arg, "Comma-separated nprobe values");
    bench->add_option("--m", m, "PQ subquantizers");
    bench->add_option("--seed", seed, "Seed for data, split and training")->required();
    bench->add_option("--max-iters", max_iters, "k-means iterations");
    bench->add_option("--threshold", threshold, "Open-set rejection threshold");
    bench->add_option("--repetitions", repetitions, "Timed repetitions (median)");
    bench->add_option("--identities", synth.identities, "Synthetic identities");
    bench->add_option("--per-identity", synth.per_identity, "Synthetic vectors each");
    bench->add_option("--dim", synth.dim, "Synthetic dimension");
    bench->add_option("--sigma", synth.sigma, "Synthetic noise std");
    bench->add_option("--split-identities", split_spec.n_identities);
    bench->add_option("--fraction", split_spec.in_gallery_fraction);
    bench->add_option("--probes-per-identity", split_spec.probes_per_identity);
    bench->add_option("--json", json_path, "JSON report output");
    bench->add_option("--tsv", tsv_path, "TSV report output ('-' for stdout)");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic labelled set");
    synth_cmd->add_option("--identities", synth.identities);
    synth_cmd->add_option("--per-identity", synth.per_identity);
    synth_cmd->add_option("--dim", synth.dim);
    synth_cmd->add_option("--sigma", synth.sigma);
    synth_cmd->add_option("--seed", seed, "Generator seed")->required();
    synth_cmd->add_option("--output", out_path, "FVB output")->required();
    synth_cmd->add_flag("--normalize,!--no-normalize", normalize,
                        "L2-normalize rows (default on)");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend() - 1);
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "vse: " << e.what() << "\n";
        return kUsage;
    }

    try {
        apply_threads(global);
        const auto labels_opt = opt_path(labels_path);
        const auto out_labels_opt = opt_path(out_labels);

        if (*ingest) {
            EmbeddingSet set;
            if (is_fvb(in_path)) {
                set = read_embeddings(in_path, labels_opt);
            } else {
                auto bytes = read_file(in_path);
                auto parsed = parse_csv(std::string_view(
                        reinterpret_cast<const char*>(bytes.data()), bytes.size()));
                auto names = labels_opt ? read_label_file(*labels_opt)
                                        : parsed.labels();
                if (names.size() != parsed.size()) {
                    throw DataError(
                            std::to_string(names.size()) + " labels for " +
                            std::to_string(parsed.size()) + " CSV rows");
                }
                set = EmbeddingSet(parsed.dim(), parsed.values(), std::move(names));
            }
            if (normalize && !set.normalized()) {
                set = normalize_rows(set);
            }
            write_embeddings(set, out_path, out_labels_opt);
            err << "ingested " << set.size() << " x " << set.dim()
                << (set.normalized() ? " (normalized)" : "") << "\n";
        } else if (*exp) {
            const auto set = read_embeddings(in_path);
            emit(out_path, to_csv(set), out);
        } else if (*build) {
            const auto kind = parse_index_kind(kind_name);
            if (kind != IndexKind::Flat && !seed) {
                throw InvalidArgument("--seed is required for " + kind_name);
            }
            const auto base = read_embeddings(in_path, labels_opt);
            IndexConfig cfg;
            cfg.kind = kind;
            cfg.nlist = nlist;
            cfg.m = m;
            cfg.seed = seed.value_or(0);
            cfg.max_iters = max_iters;
            const auto index = Index::build(base, cfg);
            save_index(index, out_path);
            err << "built " << to_string(kind) << " index over " << index.size()
                << " vectors\n";
        } else if (*search) {
            const auto index = load_index(index_path);
            const auto queries = read_embeddings(queries_path);
            if (queries.dim() != index.dim()) {
                throw DimensionMismatch(index.dim(), queries.dim());
            }
            const SearchParams params{k, nprobe};
            const auto results = index.search(queries.view(), params);
            std::string tsv = index.exact_distances() ? "# distances=exact\n"
                                                      : "# distances=approximate-adc\n";
            tsv += "query_idx\trank\tid\tlabel\tdist\n";
            char buf[64];
            for (std::size_t q = 0; q < results.size(); ++q) {
                for (std::size_t r = 0; r < results[q].size(); ++r) {
                    const auto& n = results[q][r];
                    std::snprintf(buf, sizeof(buf), "%.17g", n.dist);
                    tsv += std::to_string(q) + '\t' + std::to_string(r + 1) + '\t' +
                            std::to_string(n.id) + '\t' + index.labels()[n.id] +
                            '\t' + buf + '\n';
                }
            }
            emit(out_path, tsv, out);
        } else if (*clean) {
            const auto set = read_embeddings(in_path, labels_opt);
            CleanOptions opts{*seed, max_iters};
            const auto cleaned = clean_gallery(set, opts);
            write_embeddings(cleaned.gallery, out_path, out_labels_opt);
            write_file_atomic(reports_path, clean_reports_to_jsonl(cleaned.reports));
            err << "kept " << cleaned.gallery.size() << " of " << set.size()
                << " vectors\n";
        } else if (*fuse_cmd) {
            const auto strategy = parse_fusion_strategy(strategy_name);
            const auto a = read_embeddings(in_path, labels_opt);
            const auto fused = second_path.empty()
                    ? fuse_halves(a, strategy, normalize)
                    : fuse_sets(a, read_embeddings(second_path), strategy, normalize);
            write_embeddings(fused, out_path, out_labels_opt);
        } else if (*split) {
            const auto source = read_embeddings(in_path, labels_opt);
            split_spec.seed = *seed;
            const auto s = make_split(source, split_spec);
            write_embeddings(s.gallery, gallery_out);
            write_embeddings(s.probes, probes_out);
            err << "gallery " << s.gallery.size() << " vectors, " << s.probes.size()
                << " probes\n";
        } else if (*eval) {
            const auto index = load_index(index_path);
            const auto probes = read_embeddings(queries_path, labels_opt);
            std::unordered_set<std::string> known(index.labels().begin(),
                                                  index.labels().end());
            std::vector<std::optional<std::string>> truth;
            for (const auto& l : probes.labels()) {
                truth.push_back(known.count(l) ? std::optional<std::string>(l)
                                               : std::nullopt);
            }
            BenchOptions opts;
            opts.threshold = threshold;
            opts.repetitions = repetitions;
            const std::vector<EvalReport> reports{
                    evaluate_index(index, probes, truth, nprobe, opts)};
            if (!json_path.empty()) {
                emit(json_path, reports_to_json(reports), out);
            }
            if (!tsv_path.empty() || json_path.empty()) {
                emit(tsv_path, reports_to_tsv(reports), out);
            }
        } else if (*bench) {
            EmbeddingSet gallery;
            EmbeddingSet probes;
            std::vector<std::optional<std::string>> truth;
            if (gallery_path.empty() != queries_path.empty()) {
                throw InvalidArgument("--gallery and --probes go together");
            }
            if (gallery_path.empty()) {
                synth.seed = *seed;
                const auto source = normalize_rows(make_synthetic(synth));
                split_spec.seed = *seed;
                auto s = make_split(source, split_spec);
                gallery = std::move(s.gallery);
                probes = std::move(s.probes);
                truth = std::move(s.truth);
            } else {
                gallery = read_embeddings(gallery_path);
                probes = read_embeddings(queries_path);
                std::unordered_set<std::string> known(gallery.labels().begin(),
                                                      gallery.labels().end());
                for (const auto& l : probes.labels()) {
                    truth.push_back(known.count(l) ? std::optional<std::string>(l)
                                                   : std::nullopt);
                }
            }
            const auto configs = default_bench_matrix(
                    parse_size_list(nlists_arg, "nlist"),
                    parse_size_list(nprobes_arg, "nprobe"), m);
            BenchOptions opts;
            opts.seed = *seed;
            opts.max_iters = max_iters;
            opts.threshold = threshold;
            opts.repetitions = repetitions;
            const auto reports = run_benchmark(gallery, probes, truth, configs, opts);
            if (!json_path.empty()) {
                emit(json_path, reports_to_json(reports), out);
            }
            if (!tsv_path.empty() || json_path.empty()) {
                emit(tsv_path, reports_to_tsv(reports), out);
            }
        } else if (*synth_cmd) {
            synth.seed = *seed;
            auto set = make_synthetic(synth);
            if (normalize) {
                set = normalize_rows(set);
            }
            write_embeddings(set, out_path);
        }
    } catch (const InvalidArgument& e) {
        err << "vse: " << e.what() << "\n";
        return kUsage;
    } catch (const DataError& e) {
        err << "vse: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        err << "vse: internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kOk;
}

} // namespace vse::cli
