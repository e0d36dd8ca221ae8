#include "fairrobust/strategies.hpp"

namespace fairrobust {

std::string to_string(StrategyId id)
{
    switch (id) {
    case StrategyId::f0: return "f0";
    case StrategyId::f1: return "f1";
    case StrategyId::f2: return "f2";
    case StrategyId::f3: return "f3";
    }
    return "unknown";
}

StrategyId parse_strategy(const std::string& text)
{
    for (auto s : all_strategies()) {
        if (to_string(s) == text) {
            return s;
        }
    }
    throw ConfigError("unknown strategy '" + text + "'");
}

const std::vector<StrategyId>& all_strategies()
{
    static const std::vector<StrategyId> ids{StrategyId::f0, StrategyId::f1, StrategyId::f2, StrategyId::f3};
    return ids;
}

FairnessMetricId constraint_for(FairnessMetricId metric)
{
    return metric == FairnessMetricId::dp ? FairnessMetricId::dp : FairnessMetricId::eo;
}

TrainedModel fit_baseline(const Dataset& ds, Learner learner, const Hyperparameters& hyper, Seed seed)
{
    TrainOptions opt;
    opt.include_protected = true;
    return train(ds, learner, hyper, seed, opt);
}

FittedStrategy fit_strategy(StrategyId id, const Dataset& train_set, FairnessMetricId constraint, const StrategyConfig& config)
{
    FittedStrategy fs;
    fs.id = id;
    fs.constraint = constraint_for(constraint);
    const Seed model_seed = derive_seed(config.seed, {0x5747u});
    switch (id) {
    case StrategyId::f0:
        fs.fitted = fit_baseline(train_set, config.learner, config.hyper, model_seed);
        break;
    case StrategyId::f1: {
        CorrelationPipeline p;
        p.remover = fit_correlation_remover(train_set);
        TrainOptions opt;
        opt.include_protected = false;
        p.model = train(transform(p.remover, train_set), config.learner, config.hyper, model_seed, opt);
        fs.fitted = std::move(p);
        break;
    }
    case StrategyId::f2: {
        ExpGradConfig eg = config.expgrad;
        eg.constraint = fs.constraint;
        fs.fitted = fit_expgrad(train_set, config.learner, config.hyper, eg, model_seed);
        break;
    }
    case StrategyId::f3:
        fs.fitted = fit_threshold_optimizer(fit_baseline(train_set, config.learner, config.hyper, model_seed), train_set, fs.constraint);
        break;
    }
    return fs;
}

VectorXi predict(const FittedStrategy& strategy, const Dataset& ds, Seed coin_seed)
{
    if (const auto* m = std::get_if<TrainedModel>(&strategy.fitted)) {
        return predict(*m, ds);
    }
    if (const auto* p = std::get_if<CorrelationPipeline>(&strategy.fitted)) {
        return predict(p->model, transform(p->remover, ds));
    }
    if (const auto* eg = std::get_if<ExpGradState>(&strategy.fitted)) {
        const VectorXd q = mixture_scores(*eg, ds);
        VectorXi out(q.size());
        for (Index i = 0; i < q.size(); ++i) {
            out(i) = row_coin(coin_seed, i) < q(i) ? 1 : 0;
        }
        return out;
    }
    const auto& policy = std::get<ThresholdPolicy>(strategy.fitted);
    return randomized_predict(policy, scores(policy.model, ds), ds.protected_attr(), coin_seed);
}

} // namespace fairrobust
