#include "memfit/synthetic.hpp"

#include "memfit/errors.hpp"
#include "memfit/timeutil.hpp"
#include "memfit/util.hpp"

#include <array>
#include <cmath>

namespace memfit {

namespace {

constexpr std::int64_t kStartEpoch = 1704067200; // 2024-01-01T00:00:00Z

const std::array<const char*, 3> kArch = {"linuxx86_64", "linuxarm64", "winx86_64"};
const std::array<double, 3> kArchEffect = {0.0, 0.35, 0.6};

const std::array<const char*, 3> kCompiler = {"gcc9", "gcc12", "clang15"};

const std::array<const char*, 2> kOpt = {"opt", "dbg"};

const std::array<const char*, 4> kMakeType = {"full", "incremental", "package", "unit"};
const std::array<double, 4> kMakeEffect = {0.9, 0.25, 0.5, 0.0};

const std::array<const char*, 8> kBranch = {"main",   "release-1", "release-2", "feature-a",
                                            "feature-b", "feature-c", "hotfix-1", "hotfix-2"};

const std::array<std::int64_t, 6> kJobs = {1, 2, 4, 8, 16, 32};

constexpr double kLogBase = 5.0106352940962555; // ln(150)
constexpr double kJobsSlope = 0.03;
constexpr double kWeekendEffect = -0.2;

int index_of(const std::string& value, const auto& table) {
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (value == table[i]) return static_cast<int>(i);
    }
    return -1;
}

} // namespace

double SyntheticData::mu(const BuildRecord& rec) const {
    std::string arch = rec.build_profile.substr(0, rec.build_profile.find('-'));
    int ai = index_of(arch, kArch);
    int mi = index_of(rec.make_type, kMakeType);
    double m = kLogBase;
    if (ai >= 0) m += kArchEffect[static_cast<std::size_t>(ai)];
    if (mi >= 0) m += kMakeEffect[static_cast<std::size_t>(mi)];
    m += kJobsSlope * static_cast<double>(rec.jobs);
    if (derive_temporal(rec.time).is_weekend) m += kWeekendEffect;
    return m;
}

double SyntheticData::true_quantile(const BuildRecord& rec, double alpha) const {
    if (sigma_ == 0.0) return std::exp(mu(rec));
    return std::exp(mu(rec) + normal_quantile(alpha) * sigma_);
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_rows < 1) throw ArgumentError("generate_synthetic: n_rows must be >= 1");
    if (spec.noise_sigma < 0.0) throw ArgumentError("generate_synthetic: noise_sigma must be >= 0");

    Rng rng(spec.seed);
    Dataset ds;
    ds.source_path = "<synthetic>";
    ds.records.reserve(spec.n_rows);

    SyntheticData oracle(Dataset{}, spec.noise_sigma);

    std::int64_t t = kStartEpoch;
    for (std::size_t i = 0; i < spec.n_rows; ++i) {
        BuildRecord rec;
        t += 47 + rng.uniform_int(0, 46); // gaps in [47, 93]: strictly increasing timestamps
        rec.time = t;
        auto ai = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(kArch.size()) - 1));
        auto ci = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(kCompiler.size()) - 1));
        auto oi = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(kOpt.size()) - 1));
        rec.build_profile = std::string(kArch[ai]) + "-" + kCompiler[ci] + "-" + kOpt[oi];
        rec.make_type = kMakeType[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(kMakeType.size()) - 1))];
        rec.jobs = kJobs[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(kJobs.size()) - 1))];
        rec.branch_id = kBranch[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(kBranch.size()) - 1))];

        double m = oracle.mu(rec);
        rec.max_rss = std::exp(m + spec.noise_sigma * rng.normal());
        rec.memreq = std::exp(m) * rng.uniform(1.1, 2.5);
        rec.memory_fail_count = rec.max_rss > rec.memreq ? 1 : 0;
        ds.records.push_back(std::move(rec));
    }

    return SyntheticData(std::move(ds), spec.noise_sigma);
}

} // namespace memfit
