#include "model_io.hpp"

#include <fstream>
#include <sstream>

namespace rblab {

Json matrix_to_json(const Matrix& m)
{
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, const char* what)
{
    if (!j.is_array() || j.empty())
        throw ValidationError(std::string(what) + ": expected a non-empty array of rows");
    const auto rows = j.size();
    const auto cols = j[0].size();
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ValidationError(std::string(what) + ": ragged row " + std::to_string(r));
        for (std::size_t c = 0; c < cols; ++c)
            m(r, c) = j[r][c].get<double>();
    }
    return m;
}

Json vector_to_json(const Vector& v)
{
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v(i));
    return out;
}

Vector vector_from_json(const Json& j, const char* what)
{
    if (!j.is_array())
        throw ValidationError(std::string(what) + ": expected an array");
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v(i) = j[i].get<double>();
    return v;
}

Json instance_to_json(const BanditInstance& instance)
{
    Json j;
    j["n"] = instance.num_arms();
    j["m"] = instance.budget;
    j["reward_model"] = to_string(instance.reward_model);
    j["r_max"] = instance.reward_bound();
    Json arms = Json::array();
    for (const auto& arm : instance.arms) {
        Json a;
        a["S"] = arm.num_states();
        a["p_passive"] = matrix_to_json(arm.p_passive);
        a["p_active"] = matrix_to_json(arm.p_active);
        a["r_passive"] = vector_to_json(arm.r_passive);
        a["r_active"] = vector_to_json(arm.r_active);
        arms.push_back(std::move(a));
    }
    j["arms"] = std::move(arms);
    return j;
}

BanditInstance instance_from_json(const Json& j)
{
    try {
        BanditInstance inst;
        const int n = j.at("n").get<int>();
        inst.budget = j.at("m").get<int>();
        inst.reward_model = reward_model_from_string(j.at("reward_model").get<std::string>());
        if (j.contains("r_max"))
            inst.r_max = j.at("r_max").get<double>();
        const auto& arms = j.at("arms");
        if (!arms.is_array() || static_cast<int>(arms.size()) != n)
            throw ValidationError("model file: 'arms' must hold n = " + std::to_string(n) + " entries");
        for (const auto& a : arms) {
            Arm arm;
            const int S = a.at("S").get<int>();
            arm.p_passive = matrix_from_json(a.at("p_passive"), "p_passive");
            arm.p_active = matrix_from_json(a.at("p_active"), "p_active");
            arm.r_passive = vector_from_json(a.at("r_passive"), "r_passive");
            arm.r_active = vector_from_json(a.at("r_active"), "r_active");
            if (arm.num_states() != S || arm.p_passive.rows() != S || arm.p_passive.cols() != S ||
                arm.p_active.rows() != S || arm.p_active.cols() != S || arm.r_active.size() != S)
                throw ValidationError("model file: arm dimensions disagree with S = " + std::to_string(S));
            inst.arms.push_back(std::move(arm));
        }
        return inst;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model file: ") + e.what());
    }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out)
        throw IoError("write to '" + path.string() + "' failed");
}

BanditInstance load_instance(const std::filesystem::path& path)
{
    Json j;
    try {
        j = Json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("'" + path.string() + "': " + e.what());
    }
    return instance_from_json(j);
}

void save_instance(const BanditInstance& instance, const std::filesystem::path& path)
{
    write_text_file(path, dump_json(instance_to_json(instance)));
}

}  // namespace rblab
