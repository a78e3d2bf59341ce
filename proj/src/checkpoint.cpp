#include "smorph/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace smorph {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t read_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw DataError("checkpoint: truncated file");
    return v;
}

void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, uint32_t(s.size()));
    os.write(s.data(), std::streamsize(s.size()));
}

std::string read_string(std::istream& is) {
    uint32_t n = read_u32(is);
    if (n > 4096) throw DataError("checkpoint: implausible string length");
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw DataError("checkpoint: truncated file");
    return s;
}

void write_config(std::ostream& os, const NetConfig& cfg) {
    write_u32(os, uint32_t(cfg.input_channels));
    write_u32(os, uint32_t(cfg.input_size));
    write_u32(os, uint32_t(cfg.stage_channels.size()));
    for (int c : cfg.stage_channels) write_u32(os, uint32_t(c));
    write_u32(os, uint32_t(cfg.decoder_channels));
    write_u32(os, uint32_t(cfg.num_classes));
}

NetConfig read_config(std::istream& is) {
    NetConfig cfg;
    cfg.input_channels = int(read_u32(is));
    cfg.input_size = int(read_u32(is));
    uint32_t n_stages = read_u32(is);
    if (n_stages == 0 || n_stages > 16) throw DataError("checkpoint: bad stage count");
    cfg.stage_channels.clear();
    for (uint32_t i = 0; i < n_stages; ++i) cfg.stage_channels.push_back(int(read_u32(is)));
    cfg.decoder_channels = int(read_u32(is));
    cfg.num_classes = int(read_u32(is));
    return cfg;
}

}  // namespace

void save_networks(const std::string& path,
                   const std::vector<std::pair<std::string, const Network*>>& nets) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("checkpoint: cannot write " + path);
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, uint32_t(nets.size()));
    for (const auto& [name, net] : nets) {
        write_string(os, name);
        write_config(os, net->config());
        write_u32(os, uint32_t(net->params().size()));
        for (const auto& p : net->params()) {
            write_string(os, p.name);
            write_u32(os, uint32_t(p.shape.size()));
            for (int d : p.shape) write_u32(os, uint32_t(d));
            os.write(reinterpret_cast<const char*>(p.w.data()),
                     std::streamsize(p.w.size() * sizeof(float)));
        }
    }
    if (!os) throw DataError("checkpoint: short write on " + path);
}

std::map<std::string, Network> load_networks(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("checkpoint: bad magic in " + path);
    uint32_t version = read_u32(is);
    if (version != kVersion) throw DataError("checkpoint: unsupported version");
    uint32_t count = read_u32(is);

    std::map<std::string, Network> out;
    for (uint32_t n = 0; n < count; ++n) {
        std::string net_name = read_string(is);
        NetConfig cfg = read_config(is);
        Network net(cfg, 0);
        uint32_t n_tensors = read_u32(is);
        if (n_tensors != net.params().size())
            throw DataError("checkpoint: tensor count mismatch for " + net_name);
        for (uint32_t t = 0; t < n_tensors; ++t) {
            std::string tname = read_string(is);
            uint32_t ndims = read_u32(is);
            std::vector<int> shape(ndims);
            size_t total = 1;
            for (uint32_t d = 0; d < ndims; ++d) {
                shape[d] = int(read_u32(is));
                total *= size_t(shape[d]);
            }
            auto& p = net.params()[t];
            if (p.name != tname || p.shape != shape || p.w.size() != total)
                throw DataError("checkpoint: layout mismatch at " + tname);
            is.read(reinterpret_cast<char*>(p.w.data()),
                    std::streamsize(total * sizeof(float)));
            if (!is) throw DataError("checkpoint: truncated tensor " + tname);
        }
        out.emplace(net_name, std::move(net));
    }
    return out;
}

}  // namespace smorph
