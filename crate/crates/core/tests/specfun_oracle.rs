//! Special functions against a frozen high-precision table produced by
//! `tools/oracles/specfun_oracle.py` (Poisson-mixture Marcum series and
//! arbitrary-precision `I0`), plus randomized structural properties.

use fblfas_core::quadrature::integrate_adaptive;
use fblfas_core::specfun::{
    bessel_i0_scaled, marcum_q1, marcum_tails, ncx2_cdf, ncx2_pdf, NoncentralityParam,
};
use proptest::prelude::*;

const MARCUM_TABLE: [(f64, f64, f64, f64); 61] = [
    (5.335946300100769, 22.427619551062424, 1.7589415772888257e-65, 1.0),
    (26.557541394556562, 16.408395036386644, 1.0, 1.3102444560004063e-24),
    (11.858363283886405, 6.967619984905866, 9.9999961971780776e-1, 3.8028219224341588e-7),
    (28.300375219139006, 38.1422015574094, 4.3218181711765519e-23, 1.0),
    (21.054552564214678, 21.20655395660847, 4.4894389808300668e-1, 5.5105610191699332e-1),
    (2.1228138107842742, 29.072123695242876, 1.0782116003045421e-159, 1.0),
    (32.46477126697536, 25.104462428290432, 9.9999999999991952e-1, 8.0476226064528593e-14),
    (30.623544345294647, 25.72697837832047, 9.9999955463695263e-1, 4.4536304736860061e-7),
    (2.4583475848573633, 0.12909285554003613, 9.9959065326364763e-1, 4.0934673635237014e-4),
    (35.70380079795728, 18.88384829698107, 1.0, 6.3292430789415095e-64),
    (22.535611215184545, 26.57413591191056, 2.9333344293424012e-5, 9.9997066665570658e-1),
    (38.100044618116236, 14.389712092849622, 1.0, 8.6581093055775314e-125),
    (15.775967379316672, 4.82030166121695, 1.0, 1.7117710270350691e-28),
    (25.467319613886332, 13.889600056521246, 1.0, 1.9682510109302019e-31),
    (20.034251095039323, 9.259015816713347, 1.0, 1.5251917574109167e-27),
    (28.21290076621418, 18.997304208058274, 1.0, 1.2668060539991084e-20),
    (22.23879441903396, 12.5472396370686, 1.0, 1.2255811378096292e-22),
    (30.36321316583964, 30.567791800956012, 4.25374194500592e-1, 5.74625805499408e-1),
    (10.080207220036339, 34.28083226693286, 2.0224338466007627e-129, 1.0),
    (21.57340501226813, 31.462727813019722, 2.8015169829058793e-23, 1.0),
    (35.52319013879162, 30.424467868065776, 9.9999984222824669e-1, 1.5777175330586724e-7),
    (16.1078147430462, 18.973115407717987, 2.2790051289011997e-3, 9.977209948710988e-1),
    (11.389710291656456, 5.471348423340672, 9.9999999888761232e-1, 1.112387677513629e-9),
    (4.877391206949344, 30.494508238258327, 1.2313871368220827e-144, 1.0),
    (25.223989588588246, 25.15064004377575, 5.3713006315790145e-1, 4.6286993684209855e-1),
    (18.59422157576129, 23.91406911771771, 5.9121852285456369e-8, 9.9999994087814771e-1),
    (25.094985083853384, 35.325117428944935, 8.6336710283264287e-25, 1.0),
    (12.938685709262545, 3.657717510813465, 1.0, 4.4116072214135391e-21),
    (2.517938479597044, 38.693959670851555, 2.8483815824159068e-286, 1.0),
    (2.6184598761473676, 28.587089981832836, 1.8551175023278372e-148, 1.0),
    (27.69134523419886, 31.837769133659908, 1.817013906849337e-5, 9.9998182986093151e-1),
    (5.114736082531359, 37.05522939777514, 9.8644483288834211e-224, 1.0),
    (4.6198745697822075, 7.389093431766063, 3.6370314899629893e-3, 9.9636296851003701e-1),
    (24.654982760095475, 12.683349050342203, 1.0, 1.7891794862102414e-33),
    (17.610058505281508, 5.013969990957894, 1.0, 5.8814677838988885e-37),
    (29.40637672643294, 23.8897473933977, 9.9999998447976522e-1, 1.5520234783427658e-8),
    (24.348254003602996, 8.31710661043672, 1.0, 2.2559570236629124e-58),
    (18.94419816571132, 25.935237973483805, 1.6009196595060211e-12, 9.9999999999839908e-1),
    (1.0199515373950518, 19.546857144036064, 2.7638203631461177e-76, 1.0),
    (2.555514393529563, 31.58322704803348, 5.1815547053499547e-185, 1.0),
    (0.12088350996819464, 2.715587269411726, 2.5718553790120049e-2, 9.7428144620987995e-1),
    (2.040793999769126, 0.9292182927760488, 9.3523841691490863e-1, 6.4761583085091373e-2),
    (2.8719476458984663, 2.9932956044030123, 5.2101234919574123e-1, 4.7898765080425877e-1),
    (2.7468118313907555, 1.434044139267694, 9.4222279387855977e-1, 5.7777206121440227e-2),
    (2.792626729857559, 1.2101162911335197, 9.6886173512606911e-1, 3.1138264873930889e-2),
    (2.914752726279577, 1.9383716477889745, 8.8346707410224851e-1, 1.1653292589775149e-1),
    (0.9377239837318905, 2.241051752775111, 1.7458834651411773e-1, 8.2541165348588227e-1),
    (2.5441430216768977, 0.7314648674071754, 9.8637906241888957e-1, 1.3620937581110426e-2),
    (2.525884316177652, 2.928266639855947, 4.1515644399308321e-1, 5.8484355600691679e-1),
    (1.0511616245296564, 0.06864361632550275, 9.986447903579153e-1, 1.355209642084701e-3),
    (0.18598229323662296, 2.589794513875283, 3.7000649223057553e-2, 9.6299935077694245e-1),
    (1.5811009188565563, 0.7188784535851938, 9.2412854005910401e-1, 7.5871459940895992e-2),
    (0.12296217571087564, 1.7232259227796147, 2.2909863998614936e-1, 7.7090136001385064e-1),
    (0.6851053063476331, 0.5521558918313313, 8.862268182761644e-1, 1.137731817238356e-1),
    (1.987334742440315, 2.8115558378793426, 2.7190476137301496e-1, 7.2809523862698504e-1),
    (150.0, 152.5, 6.2678518719389622e-3, 9.9373214812806104e-1),
    (152.5, 150.0, 9.9384804230932503e-1, 6.151957690674974e-3),
    (400.0, 399.0, 8.4164739898745644e-1, 1.5835260101254356e-1),
    (399.0, 401.0, 2.2817705281329609e-2, 9.7718229471867039e-1),
    (1000.0, 1003.0, 1.352112296657218e-3, 9.9864788770334278e-1),
    (1003.0, 1000.0, 9.9865231291945379e-1, 1.3476870805462076e-3),
];
const I0_TABLE: [(f64, f64); 13] = [
    (0.0, 1.0),
    (1e-08, 9.9999999000000007e-1),
    (0.3, 7.5758062518254786e-1),
    (2.5, 2.7004644161220274e-1),
    (7.0, 1.5373774467288125e-1),
    (14.9, 1.0425387282429125e-1),
    (15.0, 1.0389953144882272e-1),
    (15.1, 1.0354878120576969e-1),
    (30.0, 7.3145946482237294e-2),
    (123.4, 3.5949612149462526e-2),
    (999.0, 1.2623555392637353e-2),
    (5000.0, 5.6420368987445887e-3),
    (10000.0, 3.9894726746047321e-3),
];

#[test]
fn marcum_matches_oracle_table() {
    for &(a, b, upper, lower) in MARCUM_TABLE.iter() {
        let t = marcum_tails(a, b).unwrap();
        assert!((t.upper - upper).abs() <= 1e-13, "Q1({a}, {b}) = {} vs {upper}", t.upper);
        assert!((t.lower - lower).abs() <= 1e-13, "1-Q1({a}, {b}) = {} vs {lower}", t.lower);
        // The smaller tail keeps relative precision.
        let (got, want) = if upper < lower { (t.upper, upper) } else { (t.lower, lower) };
        if want > 1e-300 {
            assert!(((got - want) / want).abs() <= 1e-10, "small tail at ({a}, {b}): {got} vs {want}");
        }
    }
}

#[test]
fn i0_scaled_matches_oracle_table() {
    for &(x, want) in I0_TABLE.iter() {
        let got = bessel_i0_scaled(x).unwrap();
        assert!(((got - want) / want).abs() <= 1e-12, "I0s({x}) = {got} vs {want}");
    }
    let big = bessel_i0_scaled(700.0).unwrap();
    let leading = 1.0 / (2.0 * std::f64::consts::PI * 700.0).sqrt();
    assert!(((big - leading) / leading).abs() < 1e-3);
}

#[test]
fn marcum_matches_defining_integral() {
    // Q1(1, 1) = int_1^inf x exp(-(x^2 + 1) / 2) I0(x) dx
    let integrand = |x: f64| x * (-0.5 * (x - 1.0) * (x - 1.0)).exp() * bessel_i0_scaled(x).unwrap();
    let r = integrate_adaptive(integrand, 1.0, f64::INFINITY, 1e-13).unwrap();
    assert!((marcum_q1(1.0, 1.0).unwrap() - r.value).abs() <= 1e-10);
}

#[test]
fn ncx2_pdf_normalizes_and_differentiates_cdf() {
    let five = NoncentralityParam::new(5.0).unwrap();
    let r = integrate_adaptive(|x| ncx2_pdf(x, five).unwrap(), 0.0, f64::INFINITY, 1e-12).unwrap();
    assert!((r.value - 1.0).abs() <= 1e-8);

    let two = NoncentralityParam::new(2.0).unwrap();
    let h = 1e-4;
    let fd = (ncx2_cdf(4.0 + h, two).unwrap() - ncx2_cdf(4.0 - h, two).unwrap()) / (2.0 * h);
    assert!((fd - ncx2_pdf(4.0, two).unwrap()).abs() <= 1e-6);

    let one = NoncentralityParam::new(1.0).unwrap();
    let r = integrate_adaptive(|u| ncx2_pdf(u, one).unwrap(), 0.0, 3.0, 1e-13).unwrap();
    assert!((ncx2_cdf(3.0, one).unwrap() - r.value).abs() <= 1e-8);
}

#[test]
fn ncx2_cdf_is_integral_of_pdf_on_grid() {
    for lambda in [0.0, 1.0, 10.0, 100.0] {
        let nc = NoncentralityParam::new(lambda).unwrap();
        for x in [0.5, 2.0, 7.5, 15.0, 30.0, 50.0] {
            let r = integrate_adaptive(|u| ncx2_pdf(u, nc).unwrap(), 0.0, x, 1e-13).unwrap();
            assert!((ncx2_cdf(x, nc).unwrap() - r.value).abs() <= 1e-8, "lambda={lambda} x={x}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn marcum_in_unit_interval_and_monotone(a in 0.0..200.0f64, b in 0.0..200.0f64, db in 0.0..5.0f64, da in 0.0..5.0f64) {
        let q = marcum_q1(a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert!(marcum_q1(a, b + db).unwrap() <= q + 1e-15);
        prop_assert!(marcum_q1(a + da, b).unwrap() >= q - 1e-15);
    }

    #[test]
    fn marcum_survives_huge_arguments(a in 0.0..2000.0f64, b in 0.0..2000.0f64) {
        let t = marcum_tails(a, b).unwrap();
        prop_assert!(t.upper.is_finite() && t.lower.is_finite());
        prop_assert!((t.upper + t.lower - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn ncx2_closure_identity(x in 0.0..500.0f64, lambda in 0.0..500.0f64) {
        let nc = NoncentralityParam::new(lambda).unwrap();
        let closure = ncx2_cdf(x, nc).unwrap() + marcum_q1(lambda.sqrt(), x.sqrt()).unwrap();
        prop_assert!((closure - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn i0_scaled_bounded_and_decreasing(x in 0.0..1e4f64, dx in 1e-6..10.0f64) {
        let v = bessel_i0_scaled(x).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!(bessel_i0_scaled(x + dx).unwrap() < v);
    }
}
