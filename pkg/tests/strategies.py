"""Hypothesis strategies for labels and terms over the two-point lattice."""

from hypothesis import strategies as st

from flowcalc.lattice import PUBLIC, SECRET
from flowcalc.syntax import (EXCEPTION, FALSE, GET_LABEL, HOLE, NIL, TRUE, UNIT, LabelOp, TApp,
                             TBind, TCons, TFix, TIf, TInt, TLabel, TLabelOf, TLabeled, TLam,
                             TLIO, TOp, TReturn, TTLabel, TToLabeled, TUnlabel, TVar)

labels = st.sampled_from([PUBLIC, SECRET])

db_values = st.one_of(
    st.just(HOLE), st.just(UNIT), st.just(TRUE), st.just(FALSE),
    st.integers(-3, 9).map(TInt), labels.map(TLabel),
)

leaves = st.one_of(db_values, st.just(NIL), st.just(GET_LABEL), st.just(EXCEPTION),
                   st.integers(0, 3).map(TVar))


def _extend(sub):
    return st.one_of(
        st.builds(TLabeled, labels, sub), st.builds(TLabelOf, sub),
        st.builds(TLam, st.integers(0, 3), sub), st.builds(TApp, sub, sub),
        st.builds(TFix, sub), st.builds(TIf, sub, sub, sub),
        st.builds(TOp, st.sampled_from(list(LabelOp)), sub, sub), st.builds(TCons, sub, sub),
        st.builds(TBind, sub, sub), st.builds(TReturn, sub), st.builds(TLIO, sub),
        st.builds(TTLabel, sub, sub), st.builds(TTLabel, labels.map(TLabel), sub),
        st.builds(TUnlabel, sub), st.builds(TToLabeled, sub, sub),
    )


terms = st.recursive(leaves, _extend, max_leaves=25)
