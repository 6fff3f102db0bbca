use serde::{Deserialize, Serialize};

use crate::model::{Model, VarKind};

/// Standard MINLP subtypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemClass {
    LP,
    NLP,
    ILP,
    INLP,
    MILP,
    MINLP,
    BLP,
    BNLP,
    MBLP,
    MBNLP,
}

impl ProblemClass {
    pub fn is_linear(self) -> bool {
        matches!(self, ProblemClass::LP | ProblemClass::ILP | ProblemClass::MILP | ProblemClass::BLP | ProblemClass::MBLP)
    }

    /// True for the classes without any integrality requirement.
    pub fn is_continuous(self) -> bool {
        matches!(self, ProblemClass::LP | ProblemClass::NLP)
    }
}

impl std::fmt::Display for ProblemClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// Classify by linearity of every tree and by the mix of variable kinds.
pub fn classify(model: &Model) -> ProblemClass {
    let linear = model.all_exprs().all(|e| e.is_linear());
    let integral: Vec<VarKind> = model.integer_vars().map(|v| v.kind).collect();
    let all_integral = !model.variables.is_empty() && integral.len() == model.variables.len();
    let binary = !integral.is_empty() && integral.iter().all(|k| *k == VarKind::Binary);
    use ProblemClass::*;
    match (integral.is_empty(), all_integral, binary, linear) {
        (true, _, _, true) => LP,
        (true, _, _, false) => NLP,
        (false, true, true, true) => BLP,
        (false, true, true, false) => BNLP,
        (false, true, false, true) => ILP,
        (false, true, false, false) => INLP,
        (false, false, true, true) => MBLP,
        (false, false, true, false) => MBNLP,
        (false, false, false, true) => MILP,
        (false, false, false, false) => MINLP,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, Expr, Objective, Origin, VarId};
    use crate::rat::int;

    fn with_vars(kinds: &[VarKind], objective: Expr) -> Model {
        let mut m = Model::new(Objective::minimize(objective));
        for (i, k) in kinds.iter().enumerate() {
            m.add_variable(format!("v{i}"), *k, Some(int(0)), Some(int(10)));
        }
        m
    }

    #[test]
    fn classify_examples() {
        let lin = Expr::linear([(VarId(0), int(1)), (VarId(1), int(2))]);
        assert_eq!(classify(&with_vars(&[VarKind::Continuous, VarKind::Continuous], lin.clone())), ProblemClass::LP);

        let sq = Expr::power(Expr::var(VarId(0)), Expr::constant(int(2)));
        assert_eq!(classify(&with_vars(&[VarKind::Integer], sq)), ProblemClass::INLP);

        let mut m = with_vars(&[VarKind::Integer, VarKind::Continuous], lin.clone());
        m.add_constraint(Constraint::new(Expr::product([Expr::var(VarId(0)), Expr::var(VarId(1))]), None, Some(int(4)), Origin::Parsed));
        assert_eq!(classify(&m), ProblemClass::MINLP);

        assert_eq!(classify(&with_vars(&[VarKind::Integer, VarKind::Continuous], lin.clone())), ProblemClass::MILP);
        assert_eq!(classify(&with_vars(&[VarKind::Binary, VarKind::Binary], lin.clone())), ProblemClass::BLP);
        assert_eq!(classify(&with_vars(&[VarKind::Binary, VarKind::Continuous], lin.clone())), ProblemClass::MBLP);
        assert_eq!(classify(&with_vars(&[VarKind::Binary, VarKind::Integer], lin)), ProblemClass::ILP);
        let bil = Expr::product([Expr::var(VarId(0)), Expr::var(VarId(1))]);
        assert_eq!(classify(&with_vars(&[VarKind::Binary, VarKind::Binary], bil.clone())), ProblemClass::BNLP);
        assert_eq!(classify(&with_vars(&[VarKind::Binary, VarKind::Continuous], bil)), ProblemClass::MBNLP);
    }
}
