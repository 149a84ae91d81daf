#include "ionwave/model.hpp"

#include <algorithm>
#include <cmath>

namespace ionwave {

void PhysicalPreset::validate() const {
    if (!(eta > 0.0) || eta > 0.25)
        throw InvalidParameter("eta", "Lamb-Dicke parameter must lie in (0, 0.25]");
    if (!(rabi1 > 0.0)) throw InvalidParameter("rabi1", "must be strictly positive");
    if (!(rabi2_scale > 0.0)) throw InvalidParameter("rabi2_scale", "must be strictly positive");
    if (!(hop > 0.0)) throw InvalidParameter("hop", "must be strictly positive");
}

double effective_coupling(const PhysicalPreset& preset) { return preset.eta * preset.rabi1; }

double balance_amplitude(const PhysicalPreset& preset) {
    return preset.rabi2_scale / (preset.eta * preset.rabi1);
}

double coupling_ratio(const PhysicalPreset& preset) { return effective_coupling(preset) / preset.hop; }

std::size_t center_site(std::size_t n_ions) { return (n_ions + 1) / 2; }

ChainParams ChainParams::centered(std::size_t n_ions) {
    ChainParams p;
    p.n_ions = n_ions;
    p.driven_site = center_site(n_ions);
    return p;
}

void ChainParams::validate() const {
    if (n_ions < 1) throw InvalidParameter("n_ions", "must be at least 1");
    if (driven_site < 1 || driven_site > n_ions)
        throw InvalidParameter("driven_site", "must lie in [1, n_ions]");
    if (!(hop >= 0.0) || !std::isfinite(hop)) throw InvalidParameter("hop", "must be finite and >= 0");
    if (!(coupling >= 0.0) || !std::isfinite(coupling))
        throw InvalidParameter("coupling", "must be finite and >= 0");
    if (!std::isfinite(phase)) throw InvalidParameter("phase", "must be finite");
    if (!std::isfinite(alpha0.real()) || !std::isfinite(alpha0.imag()))
        throw InvalidParameter("alpha0", "must be finite");
}

std::vector<double> ChainState::to_flat() const {
    std::vector<double> flat(flat_size(amplitudes.size()));
    for (std::size_t k = 0; k < amplitudes.size(); ++k) {
        flat[2 * k] = amplitudes[k].real();
        flat[2 * k + 1] = amplitudes[k].imag();
    }
    const std::size_t s = 2 * amplitudes.size();
    flat[s] = bloch.x;
    flat[s + 1] = bloch.y;
    flat[s + 2] = bloch.z;
    return flat;
}

ChainState ChainState::from_flat(std::span<const double> flat) {
    if (flat.size() < 3 || (flat.size() - 3) % 2 != 0)
        throw std::invalid_argument("flat state length must be 2N + 3");
    const std::size_t n = (flat.size() - 3) / 2;
    ChainState st;
    st.amplitudes.resize(n);
    for (std::size_t k = 0; k < n; ++k) st.amplitudes[k] = {flat[2 * k], flat[2 * k + 1]};
    st.bloch = {flat[2 * n], flat[2 * n + 1], flat[2 * n + 2]};
    return st;
}

ChainState initial_state(const ChainParams& params) {
    params.validate();
    ChainState st;
    st.amplitudes.assign(params.n_ions, Complex{});
    st.amplitudes[0] = params.alpha0;
    st.bloch = Bloch{0.0, 0.0, -1.0};
    return st;
}

double excited_population(const Bloch& bloch) noexcept { return 0.5 * (1.0 + bloch.z); }

double excitation_number(const ChainState& state) noexcept {
    double n = 0.0;
    for (const auto& a : state.amplitudes) n += std::norm(a);
    return n + excited_population(state.bloch);
}

double bloch_norm(const Bloch& bloch) noexcept {
    return std::sqrt(bloch.x * bloch.x + bloch.y * bloch.y + bloch.z * bloch.z);
}

TimeSeries::TimeSeries(std::vector<double> times) : times_(std::move(times)) {
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1])) throw std::invalid_argument("TimeSeries: times must be strictly increasing");
}

void TimeSeries::add_column(std::string name, std::vector<double> values) {
    if (values.size() != times_.size())
        throw std::invalid_argument("TimeSeries: column '" + name + "' has wrong length");
    if (has_column(name)) throw std::invalid_argument("TimeSeries: duplicate column '" + name + "'");
    names_.push_back(std::move(name));
    columns_.push_back(std::move(values));
}

bool TimeSeries::has_column(std::string_view name) const noexcept {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const std::vector<double>& TimeSeries::column(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw std::out_of_range("TimeSeries: no column '" + std::string(name) + "'");
    return columns_[static_cast<std::size_t>(it - names_.begin())];
}

}  // namespace ionwave
