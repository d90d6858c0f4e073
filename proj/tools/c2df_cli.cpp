// Command-line front end: corrupt images with seeded Gaussian noise, denoise
// them, score results, and run benchmark grids from manifest files.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "c2df/c2df.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void apply_threads(int threads) {
    if (threads <= 0) {
        const char* env = std::getenv("C2DF_THREADS");
        if (env != nullptr) threads = std::atoi(env);
    }
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

std::string fmt_real(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string opt_real(const std::optional<double>& v) {
    return v ? fmt_real(*v) : std::string();
}

constexpr const char* kCsvHeader =
    "image,sigma,snr_db,psnr_noisy,psnr_denoised,ssim_noisy,ssim_denoised";

struct MetricsRow {
    std::string image;
    std::optional<double> sigma, snr_db;
    std::optional<double> psnr_noisy, psnr_denoised, ssim_noisy, ssim_denoised;

    std::string to_csv() const {
        return image + "," + opt_real(sigma) + "," + opt_real(snr_db) + "," +
               opt_real(psnr_noisy) + "," + opt_real(psnr_denoised) + "," +
               opt_real(ssim_noisy) + "," + opt_real(ssim_denoised);
    }
};

std::string default_out(const std::string& input, const std::string& tag) {
    fs::path p(input);
    fs::path out = p.parent_path() / (p.stem().string() + "." + tag + p.extension().string());
    return out.string();
}

// SNR of a clean image corrupted at noise level sigma, when defined.
std::optional<double> snr_for(const c2df::Image& clean, double sigma) {
    const double s = c2df::image_std(clean);
    if (s <= 0.0 || sigma <= 0.0) return std::nullopt;
    return 20.0 * std::log10(s / sigma);
}

struct CorruptArgs {
    std::string input;
    std::optional<double> sigma, snr_db;
    std::optional<uint64_t> seed;
    std::string out, sidecar;
};

int run_corrupt(const CorruptArgs& a) {
    const c2df::Image clean = c2df::load_image(a.input);
    c2df::NoiseSpec spec;
    if (a.sigma) spec.sigma = *a.sigma;
    if (a.snr_db) {
        spec.sigma = -1.0;
        spec.snr_db = *a.snr_db;
    }
    spec.seed = *a.seed;
    const double sigma = spec.resolve_sigma(clean);
    const c2df::Image noisy = c2df::add_awgn(clean, spec);

    const std::string out = a.out.empty() ? default_out(a.input, "noisy") : a.out;
    c2df::save_image(noisy, out);

    const std::string sidecar = a.sidecar.empty() ? out + ".txt" : a.sidecar;
    std::ofstream sc(sidecar);
    if (!sc) throw c2df::Error("cannot write sidecar: " + sidecar);
    sc << "sigma=" << fmt_real(sigma) << "\n";
    sc << "snr_db=" << opt_real(a.snr_db ? a.snr_db : snr_for(clean, sigma)) << "\n";
    sc << "seed=" << *a.seed << "\n";
    std::cout << "wrote " << out << " (sigma " << fmt_real(sigma) << ")\n";
    return kExitOk;
}

struct DenoiseArgs {
    std::string input, reference, config_file, out, debug_dir;
    std::optional<double> sigma;
    bool estimate = false;
    bool no_postproc = false, no_collab = false;
    std::string patch_sizes;
    std::optional<double> epsilon, beta, zeta;
    std::optional<int> max_neighbors;
};

int run_denoise(const DenoiseArgs& a) {
    c2df::DenoiseConfig cfg;
    if (!a.config_file.empty()) c2df::load_config_file(a.config_file, cfg);
    if (!a.patch_sizes.empty()) cfg.patch_sizes = c2df::parse_int_list(a.patch_sizes, "patch-sizes");
    if (a.epsilon) cfg.epsilon = *a.epsilon;
    if (a.beta) cfg.beta = *a.beta;
    if (a.zeta) cfg.zeta = *a.zeta;
    if (a.max_neighbors) cfg.max_neighbors = *a.max_neighbors;
    if (a.no_postproc) cfg.postprocess_enabled = false;
    if (a.no_collab) cfg.collaborate = false;
    if (!a.debug_dir.empty()) cfg.debug_dir = a.debug_dir;
    if (a.estimate) {
        cfg.sigma_w = -1.0;
    } else if (a.sigma) {
        cfg.sigma_w = *a.sigma;
    } else if (cfg.sigma_w < 0.0) {
        std::cerr << "denoise: either --sigma, --estimate-sigma, or a config-file sigma is required\n";
        return kExitUsage;
    }

    if (!cfg.debug_dir.empty()) fs::create_directories(cfg.debug_dir);

    const c2df::Image noisy = c2df::load_image(a.input);
    const c2df::Image denoised = c2df::denoise(noisy, cfg);
    const std::string out = a.out.empty() ? default_out(a.input, "denoised") : a.out;
    c2df::save_image(denoised, out);
    std::cout << "wrote " << out << "\n";

    if (!a.reference.empty()) {
        const c2df::Image ref = c2df::load_image(a.reference);
        MetricsRow row;
        row.image = fs::path(a.input).filename().string();
        if (cfg.sigma_w >= 0.0) row.sigma = cfg.sigma_w;
        row.psnr_noisy = c2df::psnr(ref, noisy);
        row.psnr_denoised = c2df::psnr(ref, denoised);
        row.ssim_noisy = c2df::ssim(ref, noisy);
        row.ssim_denoised = c2df::ssim(ref, denoised);
        std::cout << kCsvHeader << "\n" << row.to_csv() << "\n";
    }
    return kExitOk;
}

struct MetricsArgs {
    std::string reference, noisy, denoised, label;
    std::optional<double> sigma, snr_db;
};

int run_metrics(const MetricsArgs& a) {
    const c2df::Image ref = c2df::load_image(a.reference);
    MetricsRow row;
    row.image = a.label.empty() ? fs::path(a.reference).filename().string() : a.label;
    row.sigma = a.sigma;
    row.snr_db = a.snr_db;
    if (!a.noisy.empty()) {
        const c2df::Image n = c2df::load_image(a.noisy);
        row.psnr_noisy = c2df::psnr(ref, n);
        row.ssim_noisy = c2df::ssim(ref, n);
    }
    if (!a.denoised.empty()) {
        const c2df::Image d = c2df::load_image(a.denoised);
        row.psnr_denoised = c2df::psnr(ref, d);
        row.ssim_denoised = c2df::ssim(ref, d);
    }
    std::cout << kCsvHeader << "\n" << row.to_csv() << "\n";
    return kExitOk;
}

struct BenchArgs {
    std::string manifest, out_csv;
};

int run_bench(const BenchArgs& a) {
    const c2df::RunManifest m = c2df::load_manifest(a.manifest);
    if (!m.out_dir.empty()) fs::create_directories(m.out_dir);
    const std::string csv_path = !a.out_csv.empty()
                                     ? a.out_csv
                                     : (m.out_dir.empty() ? std::string("bench.csv")
                                                          : m.out_dir + "/bench.csv");
    std::ofstream csv(csv_path);
    if (!csv) throw c2df::Error("cannot write CSV: " + csv_path);
    csv << kCsvHeader << ",wall_ms,status\n";

    bool any_error = false;
    uint64_t row_index = 0;
    for (const std::string& image : m.images) {
        for (const c2df::NoisePoint& pt : m.noise) {
            MetricsRow row;
            row.image = fs::path(image).filename().string();
            std::string status = "ok";
            double wall_ms = 0.0;
            try {
                const c2df::Image clean = c2df::load_image(image);
                c2df::NoiseSpec spec;
                if (pt.is_snr) {
                    spec.snr_db = pt.value;
                    row.snr_db = pt.value;
                } else {
                    spec.sigma = pt.value;
                }
                spec.seed = m.seed + row_index;
                const double sigma = spec.resolve_sigma(clean);
                row.sigma = sigma;
                if (!pt.is_snr) row.snr_db = snr_for(clean, sigma);
                const c2df::Image noisy = c2df::add_awgn(clean, spec);

                c2df::DenoiseConfig cfg = m.cfg;
                cfg.sigma_w = sigma;
                const auto t0 = std::chrono::steady_clock::now();
                const c2df::Image denoised = c2df::denoise(noisy, cfg);
                const auto t1 = std::chrono::steady_clock::now();
                wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

                row.psnr_noisy = c2df::psnr(clean, noisy);
                row.psnr_denoised = c2df::psnr(clean, denoised);
                row.ssim_noisy = c2df::ssim(clean, noisy);
                row.ssim_denoised = c2df::ssim(clean, denoised);

                if (m.emit_images && !m.out_dir.empty()) {
                    const std::string stem = fs::path(image).stem().string() + "_" +
                                             fmt_real(sigma) + fs::path(image).extension().string();
                    c2df::save_image(noisy, m.out_dir + "/noisy_" + stem);
                    c2df::save_image(denoised, m.out_dir + "/denoised_" + stem);
                }
            } catch (const std::exception& e) {
                status = "error";
                any_error = true;
                std::cerr << "row " << row_index << " (" << image << "): " << e.what() << "\n";
            }
            csv << row.to_csv() << "," << fmt_real(wall_ms) << "," << status << "\n";
            ++row_index;
        }
    }
    std::cout << "wrote " << csv_path << "\n";
    return any_error ? kExitRuntime : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Patch-based image denoiser with collaborative sparse recovery"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "Worker thread count (default: C2DF_THREADS or all cores)");

    CorruptArgs ca;
    auto* corrupt = app.add_subcommand("corrupt", "Add seeded Gaussian noise to an image");
    corrupt->add_option("input", ca.input, "Clean image (PGM/PPM)")->required();
    auto* co_sigma = corrupt->add_option("--sigma", ca.sigma, "Noise standard deviation");
    auto* co_snr = corrupt->add_option("--snr-db", ca.snr_db, "Target SNR in dB");
    co_sigma->excludes(co_snr);
    corrupt->add_option("--seed", ca.seed, "RNG seed")->required();
    corrupt->add_option("-o,--out", ca.out, "Output image path");
    corrupt->add_option("--sidecar", ca.sidecar, "Sidecar text path (default: out + .txt)");

    DenoiseArgs da;
    auto* denoise = app.add_subcommand("denoise", "Denoise a corrupted image");
    denoise->add_option("input", da.input, "Noisy image (PGM/PPM)")->required();
    auto* dn_sigma = denoise->add_option("--sigma", da.sigma, "Known noise standard deviation");
    auto* dn_est = denoise->add_flag("--estimate-sigma", da.estimate, "Estimate sigma from the input");
    dn_sigma->excludes(dn_est);
    denoise->add_option("--reference", da.reference, "Clean reference; prints metrics CSV");
    denoise->add_option("--config", da.config_file, "key=value config file");
    denoise->add_option("--patch-sizes", da.patch_sizes, "Comma-separated odd patch sizes");
    denoise->add_option("--epsilon", da.epsilon, "Grouping correlation threshold");
    denoise->add_option("--beta", da.beta, "Dictionary decorrelation threshold");
    denoise->add_option("--zeta", da.zeta, "Flat-region deviation threshold");
    denoise->add_option("--max-neighbors", da.max_neighbors, "Neighbor cap per patch");
    denoise->add_flag("--no-postproc", da.no_postproc, "Skip post-processing");
    denoise->add_flag("--no-collab", da.no_collab, "Skip collaborative refinement");
    denoise->add_option("--debug-dir", da.debug_dir, "Dump intermediate stages here");
    denoise->add_option("-o,--out", da.out, "Output image path");

    MetricsArgs ma;
    auto* metrics = app.add_subcommand("metrics", "Score images against a clean reference");
    metrics->add_option("reference", ma.reference, "Clean reference image")->required();
    metrics->add_option("--noisy", ma.noisy, "Noisy image to score");
    metrics->add_option("--denoised", ma.denoised, "Denoised image to score");
    metrics->add_option("--sigma", ma.sigma, "Annotate the row with this sigma");
    metrics->add_option("--snr-db", ma.snr_db, "Annotate the row with this SNR");
    metrics->add_option("--image-label", ma.label, "Image column value (default: reference name)");

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Run an image x noise grid from a manifest");
    bench->add_option("manifest", ba.manifest, "Manifest file (key=value)")->required();
    bench->add_option("-o,--out", ba.out_csv, "CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    apply_threads(threads);

    try {
        if (corrupt->parsed()) {
            if (!ca.sigma && !ca.snr_db) {
                std::cerr << "corrupt: exactly one of --sigma / --snr-db is required\n";
                return kExitUsage;
            }
            return run_corrupt(ca);
        }
        if (denoise->parsed()) return run_denoise(da);
        if (metrics->parsed()) {
            if (ma.noisy.empty() && ma.denoised.empty()) {
                std::cerr << "metrics: provide --noisy and/or --denoised\n";
                return kExitUsage;
            }
            return run_metrics(ma);
        }
        if (bench->parsed()) return run_bench(ba);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
