use cvpurity_core::document::*;
use cvpurity_core::*;
use nalgebra::Matrix2;
use num_complex::Complex64;
use proptest::prelude::*;

fn quadrature() -> impl Strategy<Value = QuadratureCM> {
    (0.05f64..20.0, 0.05f64..20.0, -0.95f64..0.95, prop_oneof![
        Just(Basis::IntracavityXy),
        Just(Basis::SpectralPq),
        Just(Basis::SpectralXyPair)
    ])
        .prop_map(|(xx, yy, r, basis)| QuadratureCM::new(xx, yy, r * (xx * yy).sqrt(), basis))
}

fn any_document() -> impl Strategy<Value = CmDocument> {
    prop_oneof![
        quadrature().prop_map(|q| CmDocument::new(CmPayload::Quadrature(q))),
        quadrature().prop_map(|q| CmDocument::new(CmPayload::Amplitude(AmplitudeCM::from_quadrature(&q)))),
        (quadrature(), 1i64..50).prop_map(|(q, m)| {
            CmDocument::new(CmPayload::XyPair(XYPairCM::new(q.m_xx, q.m_yy, q.m_xy, ModeIndex(m))))
        }),
        (quadrature(), quadrature(), -40i64..40, 1i64..40).prop_map(|(q1, q2, m1, step)| {
            let b1 = q1.with_basis(Basis::SpectralPq);
            let b2 = q2.with_basis(Basis::SpectralPq);
            let cm = assemble_two_mode_cm(&b1, &b2, &Matrix2::zeros(), (ModeIndex(m1), ModeIndex(m1 + step))).unwrap();
            CmDocument::new(CmPayload::TwoModePq(cm))
        }),
    ]
}

proptest! {
    #[test]
    fn json_round_trip_is_exact(doc in any_document(), note in "[a-z ]{0,12}", se in proptest::option::of(0.0f64..1.0)) {
        let mut doc = doc;
        doc.provenance.note = note;
        if let Some(se) = se {
            doc.provenance.std_errors.insert("m_xx".into(), se);
        }
        let back = CmDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(back, doc);
    }

    #[test]
    fn quadrature_amplitude_conversion_preserves_purity(q in quadrature()) {
        let doc = CmDocument::new(CmPayload::Quadrature(q));
        let amp = convert(&doc, CmKind::Amplitude).unwrap();
        let p1 = purity_by_kind(&doc.payload).unwrap();
        let p2 = purity_by_kind(&amp.payload).unwrap();
        prop_assert_eq!(p1.law, p2.law);
        prop_assert!((p1.purity - p2.purity).abs() <= 1e-12 * p1.purity.max(1.0));
    }

    #[test]
    fn pair_embedding_preserves_purity_but_changes_the_law(q in quadrature(), m in 1i64..30) {
        let doc = CmDocument::new(CmPayload::XyPair(XYPairCM::new(q.m_xx, q.m_yy, q.m_xy, ModeIndex(m))));
        let pq = convert(&doc, CmKind::TwoModePq).unwrap();
        let CmPayload::TwoModePq(cm) = &pq.payload else { unreachable!() };
        let root = 1.0 / cm.matrix().determinant().sqrt();
        let direct = purity_by_kind(&doc.payload).unwrap();
        prop_assert_eq!(direct.law, PurityLaw::InverseDet);
        prop_assert!((root - direct.purity).abs() <= 1e-12 * direct.purity.max(1.0));
        let back = convert(&pq, CmKind::XyPair).unwrap();
        let CmPayload::XyPair(xy) = back.payload else { unreachable!() };
        prop_assert!((xy.m_xx - q.m_xx).abs() <= 1e-12 * q.m_xx.max(1.0));
        prop_assert!((xy.m_yy - q.m_yy).abs() <= 1e-12 * q.m_yy.max(1.0));
        prop_assert!((xy.m_xy - q.m_xy).abs() <= 1e-12 * q.m_xx.max(q.m_yy).max(1.0));
    }
}

#[test]
fn amplitude_document_with_imaginary_anomalous_moment() {
    let cm = AmplitudeCM::new(1.5, Complex64::new(0.3, -0.4));
    let doc = CmDocument::new(CmPayload::Amplitude(cm));
    let text = doc.to_json();
    assert!(text.contains("\"m_aa_im\": -0.4"), "{text}");
    assert_eq!(CmDocument::from_json(&text).unwrap(), doc);
}

#[test]
fn unknown_fields_are_rejected() {
    let text = r#"{"schema_version": "1", "kind": "XY_PAIR", "entries": {"m_xx": 1, "m_yy": 1, "m_xy": 0, "m_zz": 1}}"#;
    assert!(matches!(CmDocument::from_json(text), Err(Error::Parse { .. })));
    let text = r#"{"schema_version": "1", "kind": "XY_PAIR", "extra": 1, "entries": {"m_xx": 1, "m_yy": 1, "m_xy": 0}}"#;
    assert!(matches!(CmDocument::from_json(text), Err(Error::Parse { .. })));
}

#[test]
fn xy_pair_modes_must_be_opposite() {
    let text = r#"{"schema_version": "1", "kind": "XY_PAIR", "modes": [2, 3], "entries": {"m_xx": 1, "m_yy": 1, "m_xy": 0}}"#;
    assert!(matches!(CmDocument::from_json(text), Err(Error::InvariantViolation(_))));
}

#[test]
fn unphysical_but_valid_cm_loads() {
    // det < 1 violates the uncertainty bound but is still a valid CM to hold
    let text = r#"{"schema_version": "1", "kind": "QUADRATURE", "entries": {"basis": "INTRACAVITY_XY", "m_xx": 0.5, "m_yy": 0.5, "m_xy": 0}}"#;
    let doc = CmDocument::from_json(text).unwrap();
    let r = reconstruct(&doc).unwrap();
    assert!(!r.states[0].physical());
    assert!((r.purity.purity - 2.0).abs() < 1e-12);
}
