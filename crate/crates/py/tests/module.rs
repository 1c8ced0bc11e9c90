use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyDict>)>(f: F) {
    Python::initialize();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(territory::territory)(py);
        let globals = PyDict::new(py);
        globals.set_item("territory", module).unwrap();
        f(py, &globals);
    });
}

fn run(py: Python<'_>, globals: &Bound<'_, PyDict>, code: &str) {
    let code = std::ffi::CString::new(code).unwrap();
    py.run(&code, Some(globals), None).unwrap();
}

#[test]
fn clusters_respect_the_cap() {
    with_module(|py, g| {
        run(
            py,
            g,
            r#"
orders = [territory.Order(f"o{i}", 0.3 + 0.01 * i, 0.1, 106.0 + 0.01 * i, -6.0) for i in range(40)]
eligible, oversized = territory.partition_oversized(orders)
assert len(eligible) == 40 and not oversized
clusters = territory.cluster_orders(eligible)
assert all(c.total_vol <= 2.8 for c in clusters)
assert sorted(i for c in clusters for i in c.member_ids) == sorted(o.id for o in orders)
assert [c.cluster_id for c in clusters] == list(range(1, len(clusters) + 1))
"#,
        );
    });
}

#[test]
fn invalid_input_raises_value_error() {
    with_module(|py, g| {
        run(
            py,
            g,
            r#"
for call in (
    lambda: territory.Order("x", -1.0, 0.1, 0.0, 0.0),
    lambda: territory.kmeans([]),
    lambda: territory.cluster_orders([], distance="manhattan"),
    lambda: territory.parse_orders("a,b\n1,2\n"),
):
    try:
        call()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
"#,
        );
    });
}

#[test]
fn parse_reports_rejected_rows() {
    with_module(|py, g| {
        run(
            py,
            g,
            r#"
text = "origin,vol_cbm,weight_ton,partner_longitude,partner_latitude\na,1,0.1,106.8,-6.2\nb,x,0.1,106.8,-6.2\n"
orders, rejected = territory.parse_orders(text)
assert [o.id for o in orders] == ["a"]
assert [r for r, _ in rejected] == [2]
"#,
        );
    });
}
