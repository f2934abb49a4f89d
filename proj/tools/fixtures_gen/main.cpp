// Writes balanced multi-participant fill sets in the attribute command's
// input formats: <name>.fills.csv and <name>.context.json.
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "optexec/error.hpp"
#include "optexec/io.hpp"
#include "optexec/simulate.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate zero-sum fixtures", "optexec-fixtures"};
    std::string out = ".";
    std::uint64_t seed = 20240611;
    int count = 8, participants = 4;
    app.add_option("--out", out, "Output directory");
    app.add_option("--seed", seed, "Generator seed");
    app.add_option("--count", count, "Number of fixtures")->check(CLI::PositiveNumber);
    app.add_option("--participants", participants, "Participants per fixture")->check(CLI::Range(2, 64));
    CLI11_PARSE(app, argc, argv);
    try {
        std::filesystem::create_directories(out);
        for (int i = 0; i < count; ++i) {
            const int T = 1 + i % 6;
            const auto set = optexec::generate_balanced_fills(seed, std::uint64_t(i), participants, T);
            optexec::AttributionContext ctx;
            ctx.arrival_price = set.price_path.front();
            ctx.horizon = T;
            ctx.price_path = set.price_path;
            const std::string stem = fmt::format("{}/balanced_{:02}", out, i);
            optexec::write_file(stem + ".fills.csv", optexec::write_fills_csv(set.fills));
            optexec::write_file(stem + ".context.json", optexec::serialize_context(ctx));
        }
    } catch (const optexec::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
