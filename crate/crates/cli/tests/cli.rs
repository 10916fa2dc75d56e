//! End-to-end checks of the `ellip` binary: exit codes, stable JSON key
//! sets, reproducibility and a checked-in SVG golden.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn ellip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellip")).args(args).env_remove("ELLIP_FIXTURES").output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = ellip(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn keys(v: &Value) -> Vec<&str> {
    v.as_object().expect("object").keys().map(String::as_str).collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ellip-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn key_sets_are_fixed() {
    let cases: &[(&[&str], &str)] = &[
        (&["data-ellipse", "--data", "galton"], "cov,ellipses,mean,n,r,slope_x_on_y,slope_y_on_x,x,y"),
        (&["decompose"], "beta_between,beta_marginal,beta_within,between_cov_unweighted,between_cov_weighted,groups,marginal_in_range,r_between,r_marginal,r_within,variables,within_cov"),
        (&["betaspace"], "ci_ellipse,coef,df,intervals,joint_ellipse,predictors,se,wald_f"),
        (&["avp"], "focus,full_model_coef,max_residual_difference,slope,vif,vif_geometric,x_star,y_star"),
        (&["measure-error", "--n", "2000"], "curve,n,reps,seed"),
        (&["heplot", "--data", "iris", "--group", "Species"], "df_e,df_h,e,e_ellipse,groups,h,h_ellipse,h_factor,lambda_alpha,lambdas,protrusion,radius,significant_by_roy,tests,variables"),
        (&["contrasts", "--data", "iris", "--group", "Species"], "groups,orthogonal,overall_h,parts,relative_residual,variables"),
        (&["canonical", "--data", "iris", "--group", "Species"], "coefficients,group_means,groups,lambdas,percent,structure,variables"),
        (&["kiss"], "cell_diagonal,distance_to_m1,distance_to_m2,kisses,max_newton_steps,max_residual,polylines,scale,vertices"),
        (&["lda", "--data", "iris", "--group", "Species"], "b,boundary_normal,boundary_offset,groups,midpoint_cut,misclassified,pooled_cov,variables"),
        (&["ridge-trace"], "pair,predictors,response,trace"),
        (&["bayes"], "beta_posterior,beta_ridge_std,cov_unscaled,max_abs_difference_from_ridge,precision,predictors,prior"),
        (&["blup"], "beta_gls,cov_gls,excluded,g,g_estimated,relative_shrinkage,schools,seed,sigma2"),
        (&["meta", "--model", "fixed"], "beta,beta_fixed,beta_random,blups,cov,cov_fixed,cov_random,delta,delta_corr,delta_source,model"),
        (&["gell", "signatures"], "c1,c1_dual_signature,c1_radii,c1_signature,c2,c2_dual_radii,c2_dual_signature,c2_signature"),
        (&["gell", "conjugate"], "factorizations,w"),
        (&["gell", "project"], "line,line_signature,plane,plane_signature"),
        (&["fixtures"], "fixtures"),
    ];
    for (args, want) in cases {
        let v = json(args);
        assert_eq!(keys(&v).join(","), *want, "{args:?}");
    }
}

#[test]
fn ellipse_objects_share_one_shape() {
    let v = json(&["data-ellipse", "--data", "galton", "--level", "0.4,0.68"]);
    for e in v["ellipses"].as_array().unwrap() {
        assert_eq!(keys(&e["ellipse"]), ["axes", "center", "radii", "signature"]);
    }
    // The 40% level uses c² = −2 ln 0.6.
    let radius = v["ellipses"][0]["radius"].as_f64().unwrap();
    assert!((radius * radius + 2.0 * 0.6f64.ln()).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    assert_eq!(ellip(&["data-ellipse", "--data", "/nonexistent/none.csv"]).status.code(), Some(2));
    assert_eq!(ellip(&["data-ellipse", "--data", "galton", "--x", "nope"]).status.code(), Some(2));
    assert_eq!(ellip(&["data-ellipse", "--data", "galton", "--level", "1.5"]).status.code(), Some(2));
    assert_eq!(ellip(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(ellip(&["kiss", "--m1", "1"]).status.code(), Some(2));

    let ragged = scratch("ragged.csv");
    std::fs::write(&ragged, "a,b\n1,2\n3\n").unwrap();
    let out = ellip(&["data-ellipse", "--data", ragged.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let collinear = scratch("collinear.csv");
    std::fs::write(&collinear, "a,b,y\n1,2,3\n2,4,5\n3,6,6\n4,8,9\n5,10,9\n").unwrap();
    let out = ellip(&["betaspace", "--data", collinear.to_str().unwrap(), "--response", "y", "--predictors", "a,b"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn seeded_output_is_byte_identical() {
    for args in [&["blup", "--seed", "5"][..], &["measure-error", "--n", "5000", "--seed", "9"], &["decompose", "--seed", "4"]] {
        let a = ellip(args);
        let b = ellip(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    assert_ne!(ellip(&["blup", "--seed", "5"]).stdout, ellip(&["blup", "--seed", "6"]).stdout);
}

#[test]
fn json_and_svg_files() {
    let (j, s) = (scratch("meta.json"), scratch("meta.svg"));
    let out = ellip(&["meta", "--json", j.to_str().unwrap(), "--svg", s.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap();
    assert_eq!(v["model"], "random");
    let svg = std::fs::read_to_string(&s).unwrap();
    assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn fixture_directory_override() {
    let dir = scratch("fixtures");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("galton.csv"), "parent,child\n1,1\n2,2\n3,3.5\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ellip")).args(["data-ellipse", "--data", "galton.csv"]).env("ELLIP_FIXTURES", &dir).output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 3);
}

#[test]
fn gell_demo_values() {
    let v = json(&["gell", "signatures"]);
    assert_eq!(v["c1_signature"], serde_json::json!([3, 0, 0]));
    assert_eq!(v["c2_signature"], serde_json::json!([2, 1, 0]));
    assert_eq!(v["c2_dual_signature"], serde_json::json!([2, 0, 1]));
    assert_eq!(v["c2_dual_radii"][0], "inf");
    let p = json(&["gell", "project"]);
    assert_eq!(p["line_signature"], serde_json::json!([1, 2, 0]));
}

/// Set `UPDATE_GOLDEN=1` to rewrite the file after an intended change.
#[test]
fn iris_he_plot_matches_golden() {
    let path = scratch("iris_he.svg");
    let out = ellip(&["heplot", "--data", "iris", "--group", "Species", "--plot", "Sepal.Length,Petal.Length", "--svg", path.to_str().unwrap()]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(&path).unwrap();
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/iris_heplot.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &svg).unwrap();
    }
    let want = std::fs::read_to_string(&golden).expect("golden file present");
    assert_eq!(svg, want, "SVG differs from {}", golden.display());
}
