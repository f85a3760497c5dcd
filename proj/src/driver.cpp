#include "swuc/driver.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "swuc/graph.hpp"
#include "swuc/lexer.hpp"
#include "swuc/parser.hpp"
#include "swuc/pretty.hpp"
#include "swuc/split.hpp"
#include "swuc/transform.hpp"

namespace swuc {

namespace {

bool read_file(const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
}

bool read_file_bytes(const std::string& path, std::vector<uint8_t>& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return true;
}

bool write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    return static_cast<bool>(out);
}

bool write_file_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << text;
    return static_cast<bool>(out);
}

std::string stem_of(const std::string& path) {
    std::string s = path;
    size_t dot = s.rfind('.');
    size_t slash = s.find_last_of('/');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
        s = s.substr(0, dot);
    return s;
}

// front end + sema + (optionally) split/lower/link
void compile_pipeline(const std::string& source, const std::string& filename,
                      bool no_collab, bool do_link, CompileOutput& out) {
    DiagBag& diags = out.diags;
    auto finish = [&] {
        diags.set_file(filename);
        diags.sort_by_position();
    };

    std::vector<Token> tokens = tokenize(source, diags);
    SourceUnit unit = parse(tokens, diags);
    frontend_check(unit, diags);
    if (diags.has_errors()) {
        finish();
        return;
    }

    TransformResult tr = monomorphize(unit, diags);
    if (diags.has_errors()) {
        finish();
        return;
    }
    closure_convert(unit, tr, diags);
    if (diags.has_errors()) {
        finish();
        return;
    }

    ProgramGraph graph = analyze(unit, diags);
    out.targets_table = emit_targets_table(graph);
    if (diags.has_errors() || !do_link) {
        finish();
        out.ok = !diags.has_errors();
        return;
    }

    out.host = split_for_target(unit, graph, Side::Host, diags, no_collab);
    out.slave = split_for_target(unit, graph, Side::Slave, diags, no_collab);
    std::vector<std::string> kernels(graph.kernel_flags.begin(),
                                     graph.kernel_flags.end());
    lower_kernels(out.host, out.slave, kernels, diags);
    finalize_symbols(out.host);
    finalize_symbols(out.slave);
    out.image = link(out.host, out.slave, diags);
    finish();
    out.ok = !diags.has_errors();
}

SimConfig sim_config_of(const DriverConfig& cfg) {
    SimConfig sc;
    sc.n_cpes = cfg.cpes;
    sc.mode = cfg.mode == "interleave" ? SimMode::Interleaved : SimMode::Sequential;
    sc.seed = cfg.seed;
    sc.trace = cfg.trace;
    return sc;
}

int run_image(const LinkedImage& image, const DriverConfig& cfg, std::ostream& out,
              std::ostream& err) {
    RunResult rr = run(image, sim_config_of(cfg), cfg.program_args);
    out << rr.stdout_text;
    if (cfg.trace) err << rr.trace_text;
    if (rr.trapped) {
        err << rr.trap_code << ": " << rr.trap_message << "\n";
        return 101;
    }
    return rr.exit_status;
}

}  // namespace

CompileOutput compile_source(const std::string& source, const std::string& filename,
                             bool no_collab) {
    CompileOutput out;
    compile_pipeline(source, filename, no_collab, true, out);
    return out;
}

int drive(const DriverConfig& config, std::ostream& out, std::ostream& err) {
    const bool color = config.color == "always";
    const std::string& cmd = config.command;

    auto usage_error = [&](const std::string& msg) {
        err << "swucc: " << msg << "\n";
        return 2;
    };

    if (cmd == "check" || cmd == "build" || cmd == "emit-split" || cmd == "run") {
        if (config.input_paths.size() != 1)
            return usage_error("`" + cmd + "` expects exactly one source file");
        const std::string& path = config.input_paths[0];
        std::string source;
        if (!read_file(path, source)) return usage_error("cannot read " + path);

        CompileOutput co;
        compile_pipeline(source, path, config.no_collab, cmd != "check", co);
        co.diags.render(err, color);
        if (config.emit_targets && !co.diags.has_errors()) out << co.targets_table;
        if (co.diags.has_errors()) return 1;

        if (cmd == "check") return 0;
        if (cmd == "emit-split") {
            // pre-finalize listings are not kept; print the finalized modules
            std::string host_path = stem_of(path) + ".host.ir.txt";
            std::string slave_path = stem_of(path) + ".slave.ir.txt";
            if (!write_file_text(host_path, print_module(co.host)) ||
                !write_file_text(slave_path, print_module(co.slave)))
                return usage_error("cannot write split output");
            out << host_path << "\n" << slave_path << "\n";
            return 0;
        }
        if (cmd == "build") {
            std::string out_path = config.output_path.empty()
                                       ? stem_of(path) + ".swucimg"
                                       : config.output_path;
            if (!write_file_bytes(out_path, serialize_image(co.image)))
                return usage_error("cannot write " + out_path);
            if (config.emit_modules) {
                if (!write_file_bytes(stem_of(out_path) + ".host.mod",
                                      serialize_module(co.host)) ||
                    !write_file_bytes(stem_of(out_path) + ".slave.mod",
                                      serialize_module(co.slave)))
                    return usage_error("cannot write module files");
            }
            return 0;
        }
        // run
        return run_image(co.image, config, out, err);
    }

    if (cmd == "link") {
        if (config.input_paths.size() != 2)
            return usage_error("`link` expects exactly two module files");
        DiagBag diags;
        TargetModule mods[2];
        for (int i = 0; i < 2; ++i) {
            std::vector<uint8_t> bytes;
            if (!read_file_bytes(config.input_paths[static_cast<size_t>(i)], bytes))
                return usage_error("cannot read " +
                                   config.input_paths[static_cast<size_t>(i)]);
            if (!deserialize_module(bytes, mods[i], diags)) {
                diags.set_file(config.input_paths[static_cast<size_t>(i)]);
                diags.render(err, color);
                return 1;
            }
        }
        TargetModule* host = nullptr;
        TargetModule* slave = nullptr;
        for (auto& m : mods) (m.side == Side::Host ? host : slave) = &m;
        if (!host || !slave)
            return usage_error("`link` needs one HOST and one SLAVE module");
        LinkedImage image = link(*host, *slave, diags);
        diags.render(err, color);
        if (diags.has_errors()) return 1;
        std::string out_path =
            config.output_path.empty() ? "a.swucimg" : config.output_path;
        if (!write_file_bytes(out_path, serialize_image(image)))
            return usage_error("cannot write " + out_path);
        return 0;
    }

    if (cmd == "exec") {
        if (config.input_paths.size() != 1)
            return usage_error("`exec` expects exactly one image file");
        std::vector<uint8_t> bytes;
        if (!read_file_bytes(config.input_paths[0], bytes))
            return usage_error("cannot read " + config.input_paths[0]);
        DiagBag diags;
        LinkedImage image;
        if (!deserialize_image(bytes, image, diags)) {
            diags.set_file(config.input_paths[0]);
            diags.render(err, color);
            return 1;
        }
        return run_image(image, config, out, err);
    }

    return usage_error("unknown command `" + cmd + "`");
}

}  // namespace swuc
