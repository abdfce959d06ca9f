package shop;

public class CardGateway implements PaymentGateway {
    public Receipt charge(Customer customer, long amountCents) {
        if (amountCents <= 0) {
            throw new IllegalArgumentException("amount must be positive");
        }
        return new Receipt(customer.getEmail(), amountCents);
    }
}
