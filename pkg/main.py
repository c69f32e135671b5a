import logging

import streamlit as st

import experiments
from extremal_sums import ExtremalSums
from gauss_dynamics import GaussDynamics
from measure_function import MeasureFunction
from utils.config import Settings

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

# Configure Streamlit page
st.set_page_config(
    page_title="Irrationality Measure Explorer",
    page_icon="∞",
    layout="wide",
    initial_sidebar_state="expanded"
)

# Custom CSS for better styling
st.markdown("""
<style>
    .main-header {
        font-size: 3rem;
        font-weight: bold;
        text-align: center;
        color: #1f77b4;
        margin-bottom: 2rem;
    }

    .feature-card {
        background: linear-gradient(135deg, #667eea 0%, #764ba2 100%);
        padding: 1.5rem;
        border-radius: 15px;
        color: white;
        margin: 1rem 0;
    }

    .feature-title {
        font-size: 1.5rem;
        font-weight: bold;
        margin-bottom: 0.5rem;
    }

    .feature-description {
        font-size: 1rem;
        opacity: 0.9;
    }
</style>
""", unsafe_allow_html=True)


def feature_card(title: str, description: str):
    st.markdown(f"""
    <div class="feature-card">
        <div class="feature-title">{title}</div>
        <div class="feature-description">{description}</div>
    </div>
    """, unsafe_allow_html=True)


def main():
    """Main application with navigation between pages"""

    st.sidebar.title("∞ Explorer")
    st.sidebar.markdown("---")

    page = st.sidebar.selectbox(
        "Choose a page:",
        ["🏠 Home", "📈 Measure Function", "📐 Extremal Sums", "🌀 Gauss Dynamics", "🎲 Experiments"],
        help="Select what you want to compute"
    )

    settings = Settings.from_env()
    st.sidebar.markdown("---")
    st.sidebar.caption(f"Tail depth {settings.tail_depth} · interval precision {settings.interval_prec} bits")

    if page == "🏠 Home":
        st.markdown('<h1 class="main-header">Irrationality Measure Explorer</h1>', unsafe_allow_html=True)
        st.markdown("""
        <div style='text-align: center; margin-bottom: 2rem;'>
            <p style='font-size: 1.2rem; color: #666;'>
                ψ_α(t) = min over 1 ≤ q ≤ t of ‖qα‖, its integral I_α(t) = ∫₁ᵗ ψ_α(ξ) dξ, and what continued fractions say about both
            </p>
        </div>
        """, unsafe_allow_html=True)

        col1, col2 = st.columns(2)
        with col1:
            feature_card(
                "📈 Measure Function",
                "Certified ψ_α(t), segment sums G_n and I_α(t) = G_N + A for any α given by its partial quotients.",
            )
            feature_card(
                "🌀 Gauss Dynamics",
                "Orbits of the natural extension of the Gauss map, Birkhoff means of f(x, y) = (1 − y)/(1 + xy) and Lévy's constant.",
            )
        with col2:
            feature_card(
                "📐 Extremal Sums",
                "S(z) in closed form, the bounds on G_n, and numbers whose average G_n/n tends to any d in [S(1), 1].",
            )
            feature_card(
                "🎲 Experiments",
                "Seeded Monte Carlo runs over random α and sweeps that check every inequality over a grid.",
            )

        st.markdown("---")
        st.subheader("🚀 Quick Start")
        st.markdown("""
        1. Pick a page in the sidebar
        2. Enter α as `golden`, `[0;1,2,3]`, `periodic:1|2`, `rule:euler`, `random:42` or a rational `p/q`
        3. Every value is shown as an interval that provably contains the true number
        """)

    elif page == "📈 Measure Function":
        MeasureFunction(settings).render_interface()

    elif page == "📐 Extremal Sums":
        ExtremalSums(settings).render_interface()

    elif page == "🌀 Gauss Dynamics":
        GaussDynamics(settings).render_interface()

    elif page == "🎲 Experiments":
        experiments.render_interface()


if __name__ == "__main__":
    main()
